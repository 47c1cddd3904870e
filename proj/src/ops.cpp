#include "diswot/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "diswot/error.hpp"
#include "diswot/kernels.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(std::string(what) + ": expected rank " + std::to_string(rank) + " tensor, got " +
                shape_string(t.shape()));
  }
}

// Unfolds one image [Cin,H,W] into columns [Cin*k*k, Ho*Wo].
void im2col(const double* img, std::int64_t cin, std::int64_t h, std::int64_t w, int k, int stride,
            int pad, std::int64_t ho, std::int64_t wo, double* col) {
  for (std::int64_t c = 0; c < cin; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col + ((c * k + ky) * k + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * stride - pad + ky;
          double* row = dst + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + wo, 0.0);
            continue;
          }
          const double* src = img + (c * h + iy) * w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * stride - pad + kx;
            row[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const auto b = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto cout = kernel.dim(0);
  const auto k = kernel.dim(2);
  if (kernel.dim(1) != cin) {
    throw Error("conv2d: input has " + std::to_string(cin) + " channels but kernel " +
                shape_string(kernel.shape()) + " expects " + std::to_string(kernel.dim(1)));
  }
  if (kernel.dim(3) != k || k % 2 == 0) {
    throw Error("conv2d: kernel must be square with odd size, got " + shape_string(kernel.shape()));
  }
  if (stride < 1 || padding < 0) throw Error("conv2d: stride must be >= 1 and padding >= 0");
  if (h + 2 * padding < k || w + 2 * padding < k) {
    throw Error("conv2d: padded input " + shape_string(input.shape()) + " smaller than kernel");
  }
  const std::int64_t ho = (h + 2 * padding - k) / stride + 1;
  const std::int64_t wo = (w + 2 * padding - k) / stride + 1;
  Tensor out({b, cout, ho, wo});

  const std::int64_t kdim = cin * k * k;
  const bool direct = (k == 1 && stride == 1 && padding == 0);
  std::vector<double> col(direct ? 0 : static_cast<std::size_t>(kdim * ho * wo));
  for (std::int64_t n = 0; n < b; ++n) {
    const double* img = input.data() + n * cin * h * w;
    const double* cols = img;
    if (!direct) {
      im2col(img, cin, h, w, static_cast<int>(k), stride, padding, ho, wo, col.data());
      cols = col.data();
    }
    kernels::gemm({static_cast<std::size_t>(cout), static_cast<std::size_t>(ho * wo),
                   static_cast<std::size_t>(kdim), kernel.data(), static_cast<std::size_t>(kdim),
                   cols, static_cast<std::size_t>(ho * wo), out.data() + n * cout * ho * wo,
                   static_cast<std::size_t>(ho * wo)});
  }
  return out;
}

Tensor relu(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor batchnorm_batchstats(const Tensor& t, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(t, 4, "batchnorm input");
  const auto b = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
  if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c)) {
    throw Error("batchnorm: gamma/beta length must equal channel count " + std::to_string(c));
  }
  if (b * hw < 2) throw Error("batchnorm: need at least 2 values per channel (B*H*W >= 2)");
  if (!(eps > 0.0)) throw Error("batchnorm: eps must be positive");
  Tensor out(t.shape());
  const double count = static_cast<double>(b * hw);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::int64_t n = 0; n < b; ++n) s += kernels::sum(t.data() + (n * c + ch) * hw, hw);
    const double mean = s / count;
    double ss = 0.0;
    for (std::int64_t n = 0; n < b; ++n) {
      const double* p = t.data() + (n * c + ch) * hw;
      for (std::int64_t i = 0; i < hw; ++i) {
        const double d = p[i] - mean;
        ss += d * d;
      }
    }
    const double var = ss / count;
    const double scale = gamma[ch] / std::sqrt(var + eps);
    const double shift = beta[ch] - mean * scale;
    for (std::int64_t n = 0; n < b; ++n) {
      const double* p = t.data() + (n * c + ch) * hw;
      double* q = out.data() + (n * c + ch) * hw;
      for (std::int64_t i = 0; i < hw; ++i) q[i] = p[i] * scale + shift;
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& t) {
  require_rank(t, 4, "global_avg_pool input");
  const auto b = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
  Tensor out({b, c});
  for (std::int64_t i = 0; i < b * c; ++i) {
    out[i] = kernels::sum(t.data() + i * hw, hw) / static_cast<double>(hw);
  }
  return out;
}

Tensor avg_pool2d(const Tensor& t, int kernel, int stride, int padding, bool count_include_pad) {
  require_rank(t, 4, "avg_pool2d input");
  if (kernel < 1 || stride < 1 || padding < 0 || 2 * padding > kernel) {
    throw Error("avg_pool2d: invalid kernel/stride/padding");
  }
  const auto b = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  if (h + 2 * padding < kernel || w + 2 * padding < kernel) {
    throw Error("avg_pool2d: input " + shape_string(t.shape()) + " smaller than window");
  }
  const std::int64_t ho = (h + 2 * padding - kernel) / stride + 1;
  const std::int64_t wo = (w + 2 * padding - kernel) / stride + 1;
  Tensor out({b, c, ho, wo});
  for (std::int64_t plane = 0; plane < b * c; ++plane) {
    const double* src = t.data() + plane * h * w;
    double* dst = out.data() + plane * ho * wo;
    for (std::int64_t oy = 0; oy < ho; ++oy) {
      for (std::int64_t ox = 0; ox < wo; ++ox) {
        double s = 0.0;
        int taps = 0;
        for (int ky = 0; ky < kernel; ++ky) {
          const std::int64_t iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const std::int64_t ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= w) continue;
            s += src[iy * w + ix];
            ++taps;
          }
        }
        dst[oy * wo + ox] = s / (count_include_pad ? kernel * kernel : taps);
      }
    }
  }
  return out;
}

Tensor linear(const Tensor& features, const Tensor& weight, const Tensor* bias) {
  require_rank(features, 2, "linear features");
  require_rank(weight, 2, "linear weight");
  const auto b = features.dim(0), c = features.dim(1), n = weight.dim(0);
  if (weight.dim(1) != c) {
    throw Error("linear: features have " + std::to_string(c) + " columns but weight is " +
                shape_string(weight.shape()));
  }
  if (bias != nullptr && bias->size() != static_cast<std::size_t>(n)) {
    throw Error("linear: bias length must be " + std::to_string(n));
  }
  Tensor out({b, n});
  for (std::int64_t i = 0; i < b; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      out.at(i, j) = kernels::dot(features.data() + i * c, weight.data() + j * c, c) +
                     (bias != nullptr ? (*bias)[j] : 0.0);
    }
  }
  return out;
}

Tensor residual_add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error("residual_add: shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
  }
  Tensor out = a;
  kernels::axpy(1.0, b.data(), out.data(), out.size());
  return out;
}

Tensor init_tensor(const Shape& shape, const InitSpec& spec, std::uint64_t stream_id) {
  double std_dev = spec.gaussian_std;
  if (spec.scheme == InitScheme::Kaiming) {
    const std::int64_t fan_in =
        shape.size() == 1 ? shape[0] : shape_numel(shape) / std::max<std::int64_t>(shape[0], 1);
    std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
  } else if (!(spec.gaussian_std > 0.0)) {
    throw Error("init_tensor: gaussian_std must be positive");
  }
  Tensor out(shape);
  Rng rng(spec.seed, stream_id);
  for (double& v : out.values()) v = std_dev * rng.normal();
  return out;
}

Tensor log_softmax_rows(const Tensor& logits, double temperature) {
  require_rank(logits, 2, "softmax logits");
  if (!(temperature > 0.0)) throw Error("softmax: temperature must be positive");
  const auto b = logits.dim(0), n = logits.dim(1);
  Tensor out(logits.shape());
  for (std::int64_t i = 0; i < b; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < n; ++j) mx = std::max(mx, logits.at(i, j) / temperature);
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) s += std::exp(logits.at(i, j) / temperature - mx);
    const double lse = mx + std::log(s);
    for (std::int64_t j = 0; j < n; ++j) out.at(i, j) = logits.at(i, j) / temperature - lse;
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits, double temperature) {
  Tensor out = log_softmax_rows(logits, temperature);
  for (double& v : out.values()) v = std::exp(v);
  return out;
}

namespace {
void check_labels(std::span<const int> labels, std::int64_t b, std::int64_t n) {
  if (static_cast<std::int64_t>(labels.size()) != b) {
    throw Error("labels: expected " + std::to_string(b) + " labels, got " +
                std::to_string(labels.size()));
  }
  for (int l : labels) {
    if (l < 0 || l >= n) {
      throw Error("labels: label " + std::to_string(l) + " outside [0, " + std::to_string(n) + ")");
    }
  }
}
}  // namespace

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross-entropy logits");
  check_labels(labels, logits.dim(0), logits.dim(1));
  const Tensor logp = log_softmax_rows(logits);
  double s = 0.0;
  for (std::int64_t i = 0; i < logits.dim(0); ++i) s -= logp.at(i, labels[i]);
  return s / static_cast<double>(logits.dim(0));
}

Tensor fc_weight_grad(const Tensor& features, const Tensor& logits, std::span<const int> labels) {
  require_rank(features, 2, "fc_weight_grad features");
  require_rank(logits, 2, "fc_weight_grad logits");
  const auto b = features.dim(0), c = features.dim(1), n = logits.dim(1);
  if (logits.dim(0) != b) throw Error("fc_weight_grad: batch mismatch between features and logits");
  check_labels(labels, b, n);
  Tensor delta = softmax_rows(logits);
  for (std::int64_t i = 0; i < b; ++i) delta.at(i, labels[i]) -= 1.0;
  Tensor grad({n, c});
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::int64_t i = 0; i < b; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      kernels::axpy(delta.at(i, j) * inv_b, features.data() + i * c, grad.data() + j * c, c);
    }
  }
  return grad;
}

}  // namespace diswot
