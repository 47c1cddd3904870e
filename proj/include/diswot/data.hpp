#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "diswot/tensor.hpp"

namespace diswot {

enum class BatchSource { CifarFile, Synthetic };

// One scoring batch. Immutable after construction.
struct Batch {
  Tensor images;            // [B,3,H,W]
  std::vector<int> labels;  // B entries in [0, n_classes)
  BatchSource source = BatchSource::Synthetic;
  std::uint64_t seed = 0;
};

// Record layout: 1 label byte (CIFAR-10) or 2 (CIFAR-100 coarse, fine; the
// fine label is used), then 3072 pixel bytes, R, G, B planes of 32x32.
enum class CifarVariant { Cifar10, Cifar100, Auto };

inline constexpr std::size_t kCifarPixels = 3 * 32 * 32;

// Samples `batch_size` records without replacement (seeded) and normalizes
// each channel as (byte / 255 - mean) / std. Auto picks the variant whose
// record size divides the file length.
Batch load_cifar_batch(const std::filesystem::path& path, int batch_size, std::uint64_t seed,
                       CifarVariant variant = CifarVariant::Auto);

// Standard-normal images and uniform labels.
Batch synth_batch(int batch_size, int channels, int height, int width, int n_classes,
                  std::uint64_t seed);

// Score file: header `arch_id,proxy,value,higher_is_better,seed`.
struct ScoreRow {
  std::string arch_id;
  std::string proxy;
  double value = 0.0;
  bool higher_is_better = true;
  std::uint64_t seed = 0;
  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows);
void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(std::istream& in, const std::string& source_name);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);

// Accuracy table: header `arch_id,accuracy`, insertion ordered, unique ids.
using AccuracyTable = std::vector<std::pair<std::string, double>>;

void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table);
AccuracyTable read_accuracy_csv(std::istream& in, const std::string& source_name);
AccuracyTable load_accuracy_csv(const std::filesystem::path& path);

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace diswot
