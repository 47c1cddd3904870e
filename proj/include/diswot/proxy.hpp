#pragma once

// Training-free scores. Every score is oriented so that higher is better:
// DisWOT reports -(M_s + M_r) and KD-distance proxies report -distance.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "diswot/arch.hpp"
#include "diswot/data.hpp"
#include "diswot/network.hpp"
#include "diswot/tensor.hpp"

namespace diswot {

struct ProxyScore {
  std::string proxy_name;
  double value = 0.0;
  bool higher_is_better = true;
};

enum class WeightSource { FcWeights, FcWeightGrads };
enum class GramNormalization { RowL2, MatrixL2 };

// Per-class localization maps [N, H*W]: row n = sum_c w[n,c] * mean_b A[b,c].
struct GradCamMaps {
  Tensor maps;
};

struct SimilarityMatrix {
  Tensor gram;  // square
  GramNormalization normalization = GramNormalization::RowL2;
};

GradCamMaps gradcam_maps(const ActivationBundle& bundle, WeightSource source);

// rows [n, d] -> normalized (rows * rows^T), n x n. RowL2 leaves zero rows
// at zero; MatrixL2 divides by the Frobenius norm.
SimilarityMatrix gram_similarity(const Tensor& rows, GramNormalization normalization);

// (1/n^2) * sum of squared entry differences. Shared by the proxies and the
// distillation losses.
double similarity_distance(const SimilarityMatrix& a, const SimilarityMatrix& b);

// M_s over the class dimension; class counts must match.
double semantic_similarity(const GradCamMaps& teacher, const GradCamMaps& student,
                           GramNormalization normalization = GramNormalization::RowL2);

// M_r over the batch dimension; each sample's activations are flattened.
double relation_similarity(const Tensor& teacher_features, const Tensor& student_features,
                           GramNormalization normalization = GramNormalization::RowL2);

struct DiswotOptions {
  bool use_semantic = true;
  bool use_relation = true;
  WeightSource weight_source = WeightSource::FcWeights;
  GramNormalization normalization = GramNormalization::RowL2;
};

// Name for an option set: "diswot", "diswot_ms" or "diswot_mr".
std::string diswot_proxy_name(const DiswotOptions& options);

ProxyScore diswot_score(const ActivationBundle& teacher, const ActivationBundle& student,
                        const DiswotOptions& options = {});

// Builds the student at random init, runs one forward pass on `batch` and
// scores it against the teacher.
ProxyScore diswot_score(const NetworkInstance& teacher, const ArchDescriptor& student_desc,
                        const SearchSpace& space, const Batch& batch, const InitSpec& init,
                        const DiswotOptions& options = {});

// Binary ReLU-code kernel: K[i,j] = number of units on which samples i and j
// are both active or both inactive.
class NwotKernel {
 public:
  explicit NwotKernel(std::int64_t batch_size);
  void add(const Tensor& relu_output);
  const Tensor& kernel() const { return kernel_; }

 private:
  Tensor kernel_;
  std::vector<double> codes_;
};

inline constexpr double kNwotEpsilon = 1e-6;

// log|det(K + eps I)|
double nwot_logdet(const Tensor& kernel, double eps = kNwotEpsilon);
ProxyScore nwot_score(const NetworkInstance& net, const Batch& batch);

enum class KdKind { KdKl, FitNets, At, Sp, Cc, Rkd, Nst, Pkt };
inline constexpr KdKind kAllKdKinds[] = {KdKind::KdKl, KdKind::FitNets, KdKind::At, KdKind::Sp,
                                         KdKind::Cc,   KdKind::Rkd,     KdKind::Nst, KdKind::Pkt};
std::string_view kd_kind_name(KdKind kind);

// Fixed seeded projection [teacher_channels, student_channels] with
// N(0, 1/student_channels) entries, used to align FitNets features.
Tensor fitnets_projection(std::int64_t student_channels, std::int64_t teacher_channels);

inline constexpr double kPktEpsilon = 1e-7;

// Non-negative distance between the two bundles under a KD objective.
double kd_raw_distance(KdKind kind, const ActivationBundle& teacher,
                       const ActivationBundle& student, double temperature = 1.0);
// -kd_raw_distance, higher is better.
ProxyScore kd_distance(KdKind kind, const ActivationBundle& teacher,
                       const ActivationBundle& student, double temperature = 1.0);

enum class CostKind { Params, Flops };
ProxyScore cost_proxy(CostKind kind, const ArchDescriptor& desc, const SearchSpace& space);

}  // namespace diswot
