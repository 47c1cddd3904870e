#pragma once

// Shared fixtures for the test binaries.

#include <cstdint>
#include <vector>

#include "diswot/network.hpp"
#include "diswot/ops.hpp"
#include "diswot/rng.hpp"
#include "diswot/tensor.hpp"

namespace testing {

using diswot::Rng;
using diswot::Tensor;

inline Tensor random_tensor(const diswot::Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

inline std::vector<int> random_labels(std::int64_t b, std::int64_t n, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(b));
  for (int& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  return labels;
}

// A self-consistent bundle: features are the GAP of the map, logits come from
// the FC weight and the gradient from the analytic formula.
inline diswot::ActivationBundle bundle_from(const Tensor& map, const Tensor& fc_weight,
                                            const std::vector<int>& labels) {
  diswot::ActivationBundle b;
  b.pre_gap_map = map;
  b.penultimate_features = diswot::global_avg_pool(map);
  b.fc_weight = fc_weight;
  b.logits = diswot::linear(b.penultimate_features, fc_weight);
  b.fc_weight_grad = diswot::fc_weight_grad(b.penultimate_features, b.logits, labels);
  return b;
}

inline diswot::ActivationBundle random_bundle(Rng& rng, std::int64_t b, std::int64_t c,
                                              std::int64_t h, std::int64_t w, std::int64_t n) {
  return bundle_from(random_tensor({b, c, h, w}, rng), random_tensor({n, c}, rng),
                     random_labels(b, n, rng));
}

}  // namespace testing
