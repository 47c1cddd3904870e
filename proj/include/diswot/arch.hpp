#pragma once

// Candidate architecture descriptors for the three search spaces and the
// analytic cost accounting used by constraints and cost proxies.
//
//   S0     CIFAR-ResNet with three residual stages (16/32/64 channels) whose
//          depths are searched in {1,3,5,7}; 4^3 = 64 candidates.
//   NB201  NAS-Bench-201 cell: 4-node DAG, 6 edges, 5 ops per edge.
//   S2     staged ResNet-like space: per stage block type, kernel, width,
//          depth; fixed stride schedule (6 stages CIFAR, 4 stages ImageNet).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diswot/rng.hpp"

namespace diswot {

enum class SpaceKind { S0, Nb201, S2Cifar, S2ImageNet };

std::string_view space_name(SpaceKind kind);
SpaceKind parse_space_kind(std::string_view name);

struct S0Depths {
  std::array<int, 3> depths{1, 1, 1};
  friend auto operator<=>(const S0Depths&, const S0Depths&) = default;
};

enum class Nb201Op { None, SkipConnect, Conv1x1, Conv3x3, AvgPool3x3 };
inline constexpr std::array<Nb201Op, 5> kNb201Ops{Nb201Op::None, Nb201Op::SkipConnect,
                                                  Nb201Op::Conv1x1, Nb201Op::Conv3x3,
                                                  Nb201Op::AvgPool3x3};
std::string_view nb201_op_name(Nb201Op op);

// Edge order follows the string form: (1<-0), (2<-0), (2<-1), (3<-0), (3<-1), (3<-2).
struct Nb201Cell {
  std::array<Nb201Op, 6> ops{};
  friend auto operator<=>(const Nb201Cell&, const Nb201Cell&) = default;
};
inline constexpr std::array<std::pair<int, int>, 6> kNb201Edges{
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

enum class BlockKind { Basic, Bottleneck };
std::string_view block_kind_name(BlockKind kind);

struct S2Stage {
  BlockKind block = BlockKind::Basic;
  int kernel = 3;
  int channels = 8;
  int depth = 1;
  int stride = 1;
  friend auto operator<=>(const S2Stage&, const S2Stage&) = default;
};

struct S2Config {
  int stem_channels = 16;
  std::vector<S2Stage> stages;
  friend auto operator<=>(const S2Config&, const S2Config&) = default;
};

using ArchDescriptor = std::variant<S0Depths, Nb201Cell, S2Config>;

struct Constraints {
  std::optional<std::int64_t> max_params;
  std::optional<std::int64_t> max_flops;
  std::optional<std::int64_t> max_depth;
};

struct S2StageTemplate {
  int channels;
  int stride;
};

struct SearchSpace {
  SpaceKind kind = SpaceKind::S0;
  int num_classes = 100;
  int input_size = 32;  // square input, 3 channels
  Constraints constraints;

  // S0
  std::vector<int> s0_depth_choices{1, 3, 5, 7};
  std::array<int, 3> s0_channels{16, 32, 64};
  int s0_stem_channels = 16;

  // NB201 macro skeleton (desk scale: 2 cells per stage; the benchmark uses 5)
  int nb201_channels = 16;
  int cells_per_stage = 2;

  // S2
  int s2_stem_kernel = 3;
  int s2_stem_stride = 1;
  int s2_stem_channels = 32;
  std::vector<S2StageTemplate> s2_stages;
  std::vector<int> s2_kernel_choices{3, 5, 7};
  int s2_max_stage_depth = 3;
  int s2_min_channels = 8;
  int s2_max_channels = 2048;

  static SearchSpace make(SpaceKind kind);
};

inline constexpr std::array<double, 4> kWidthMutationFactors{0.67, 0.8, 1.25, 1.5};

// Structural validity: buildable in `space`. S0 accepts any depth >= 1 so
// deeper teachers (e.g. 18,18,18) share the template.
void validate_descriptor(const ArchDescriptor& desc, const SearchSpace& space);
// Searchable candidate: structurally valid and every choice in the space's
// discrete sets (S0 depths in s0_depth_choices).
bool is_candidate(const ArchDescriptor& desc, const SearchSpace& space);

std::int64_t count_params(const ArchDescriptor& desc, const SearchSpace& space);
// 2 x multiply-accumulates of all conv and FC layers for one image of
// input_h x input_w; norm, activation and pooling are free.
std::int64_t count_flops(const ArchDescriptor& desc, const SearchSpace& space, int input_h,
                         int input_w);
std::int64_t count_flops(const ArchDescriptor& desc, const SearchSpace& space);
// Weight layers on the main path: stem + block convs + FC (shortcuts excluded).
std::int64_t count_depth(const ArchDescriptor& desc, const SearchSpace& space);
bool satisfies_constraints(const ArchDescriptor& desc, const SearchSpace& space);

Nb201Cell parse_nb201(std::string_view s);
std::string serialize_nb201(const Nb201Cell& cell);

// Bottleneck inner width: a quarter of the output, rounded to a multiple of 8.
int bottleneck_width(int channels);
int round_channels(double channels, const SearchSpace& space);

// One locus per call; result is a candidate of `space`.
ArchDescriptor mutate(const ArchDescriptor& desc, const SearchSpace& space, Rng& rng);
// Uniform over the space's discrete choices, rejection-sampled against the
// space constraints (throws after a bounded number of attempts).
ArchDescriptor sample_random(const SearchSpace& space, Rng& rng);
std::vector<ArchDescriptor> enumerate_s0();
// Largest configuration of the space, the default teacher.
ArchDescriptor max_descriptor(const SearchSpace& space);

// Compact textual id, comma-free so it embeds in CSV:
//   S0 "7-1-3", NB201 its cell string, S2 "c32_basic-k3-c96-d3-s1_...".
std::string arch_id(const ArchDescriptor& desc);
ArchDescriptor parse_arch_id(std::string_view id, SpaceKind kind);

// JSON form {"space": ..., "desc": ...}; see docs/arch.schema.json.
std::string arch_to_json(const ArchDescriptor& desc, SpaceKind kind);
std::pair<SpaceKind, ArchDescriptor> arch_from_json(std::string_view text);

}  // namespace diswot
