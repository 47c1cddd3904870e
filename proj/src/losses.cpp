#include "diswot/losses.hpp"

#include <cmath>

#include "diswot/error.hpp"
#include "diswot/ops.hpp"

namespace diswot {

double loss_kd_kl(const Tensor& zt, const Tensor& zs, const KdLossConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw Error("loss_kd_kl: temperature must be positive");
  if (cfg.alpha < 0.0) throw Error("loss_kd_kl: alpha must be non-negative");
  if (zt.shape() != zs.shape() || zt.rank() != 2) {
    throw Error("loss_kd_kl: logit shapes differ: " + shape_string(zt.shape()) + " vs " +
                shape_string(zs.shape()));
  }
  const Tensor pt = softmax_rows(zt, cfg.temperature);
  const Tensor ls = log_softmax_rows(zs, cfg.temperature);
  double ce = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) ce -= pt[i] * ls[i];
  ce /= static_cast<double>(zt.dim(0));
  return cfg.alpha * cfg.temperature * cfg.temperature * ce;
}

double loss_semantic(const SimilarityMatrix& teacher, const SimilarityMatrix& student) {
  return similarity_distance(teacher, student);
}

double loss_relation(const SimilarityMatrix& teacher, const SimilarityMatrix& student) {
  return similarity_distance(teacher, student);
}

double loss_relation(const Tensor& teacher_features, const Tensor& student_features,
                     GramNormalization normalization) {
  return relation_similarity(teacher_features, student_features, normalization);
}

double loss_diswot_total(DiswotVariant variant, const LossComponents& c) {
  const double base = c.ce + c.kl;
  if (variant == DiswotVariant::DisWOT) return base;
  return base + c.l_ms + c.l_mr;
}

}  // namespace diswot
