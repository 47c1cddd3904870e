#pragma once

#include "diswot/proxy.hpp"
#include "diswot/tensor.hpp"

namespace diswot {

struct KdLossConfig {
  double temperature = 4.0;
  double alpha = 0.9;
};

// alpha * rho^2 * batch-mean soft-target cross entropy.
double loss_kd_kl(const Tensor& teacher_logits, const Tensor& student_logits,
                  const KdLossConfig& cfg);

// Same kernel as the DisWOT proxy terms.
double loss_semantic(const SimilarityMatrix& teacher, const SimilarityMatrix& student);
double loss_relation(const SimilarityMatrix& teacher, const SimilarityMatrix& student);
double loss_relation(const Tensor& teacher_features, const Tensor& student_features,
                     GramNormalization normalization = GramNormalization::RowL2);

enum class DiswotVariant { DisWOT, DisWOTDagger };

struct LossComponents {
  double ce = 0.0;
  double kl = 0.0;
  double l_ms = 0.0;
  double l_mr = 0.0;
};

double loss_diswot_total(DiswotVariant variant, const LossComponents& c);

}  // namespace diswot
