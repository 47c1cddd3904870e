#pragma once

// Inference kernels for random-init CNN forward passes plus the analytic
// gradient of mean cross-entropy with respect to the final linear layer.
// All functions are pure; inputs are never modified.

#include <cstdint>
#include <optional>
#include <span>

#include "diswot/tensor.hpp"

namespace diswot {

enum class InitScheme { Kaiming, Gaussian };

struct InitSpec {
  InitScheme scheme = InitScheme::Kaiming;
  double gaussian_std = 0.01;  // Gaussian only
  std::uint64_t seed = 0;
};

// Zero-padded cross-correlation (no kernel flip).
// input [B,Cin,H,W], kernel [Cout,Cin,k,k] with k odd.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);

Tensor relu(const Tensor& t);

// Training-mode normalization with biased batch variance per channel.
Tensor batchnorm_batchstats(const Tensor& t, const Tensor& gamma, const Tensor& beta,
                            double eps = 1e-5);

// [B,C,H,W] -> [B,C]
Tensor global_avg_pool(const Tensor& t);

// Square-window average pooling. With count_include_pad false the divisor is
// the number of in-bounds taps.
Tensor avg_pool2d(const Tensor& t, int kernel, int stride, int padding,
                  bool count_include_pad = false);

// features [B,C] * weight[N,C]^T (+ bias[N]) -> [B,N]
Tensor linear(const Tensor& features, const Tensor& weight, const Tensor* bias = nullptr);

Tensor residual_add(const Tensor& a, const Tensor& b);

// Kaiming: N(0, 2/fan_in) with fan_in = prod(shape[1:]) (shape[0] for rank 1).
// Gaussian: N(0, gaussian_std^2). Deterministic in (spec.seed, stream_id).
Tensor init_tensor(const Shape& shape, const InitSpec& spec, std::uint64_t stream_id);

// Row-wise softmax of logits / temperature, computed with max subtraction.
Tensor softmax_rows(const Tensor& logits, double temperature = 1.0);
Tensor log_softmax_rows(const Tensor& logits, double temperature = 1.0);

// Mean over the batch of -log softmax(logits)[label].
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// (1/B) (softmax(logits) - onehot(labels))^T features: d(mean CE)/dW for
// logits = features W^T + b.
Tensor fc_weight_grad(const Tensor& features, const Tensor& logits, std::span<const int> labels);

}  // namespace diswot
