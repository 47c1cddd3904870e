#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>

#include "diswot/arch.hpp"
#include "diswot/ops.hpp"
#include "diswot/tensor.hpp"

namespace diswot {

// Everything the proxies need from one forward pass (plus the analytic
// gradient of mean cross-entropy w.r.t. the classifier weight).
struct ActivationBundle {
  Tensor penultimate_features;  // [B,C] after global average pooling
  Tensor pre_gap_map;           // [B,C,H,W]
  Tensor logits;                // [B,N]
  Tensor fc_weight;             // [N,C]
  Tensor fc_weight_grad;        // [N,C]
};

// Called with every post-ReLU activation during a forward pass.
using ReluObserver = std::function<void(const Tensor&)>;

namespace detail {
struct Graph;
}

// A built, seeded, randomly initialized network. Immutable after
// construction; forward() is const and safe to call concurrently.
class NetworkInstance {
 public:
  const ArchDescriptor& descriptor() const { return desc_; }
  const SearchSpace& space() const { return space_; }
  const InitSpec& init() const { return init_; }
  const std::map<std::string, Tensor>& weights() const { return weights_; }

  // Sum of element counts over all weight tensors.
  std::int64_t weight_count() const;

  ActivationBundle forward(const Tensor& images, std::span<const int> labels,
                           const ReluObserver* observer = nullptr) const;

 private:
  friend NetworkInstance build_network(const ArchDescriptor&, const SearchSpace&, const InitSpec&);

  ArchDescriptor desc_;
  SearchSpace space_;
  InitSpec init_;
  std::shared_ptr<const detail::Graph> graph_;
  std::map<std::string, Tensor> weights_;
};

// S0: stem 3x3 conv(16)+BN+ReLU, three stages of basic residual blocks
// (stride 2 entering stages 2 and 3, 1x1 conv+BN projection shortcuts), GAP, FC.
// NB201: stem conv+BN, cells_per_stage cells per stage at 16/32/64 channels
// with residual reduction blocks in between, BN+ReLU, GAP, FC.
// S2: stem conv+BN+ReLU, stages of basic or bottleneck blocks, GAP, FC.
// Conv/FC weights are drawn from `init` with stream id = hash of the tensor
// name; norm scales start at 1 and shifts and the FC bias at 0.
NetworkInstance build_network(const ArchDescriptor& desc, const SearchSpace& space,
                              const InitSpec& init);

}  // namespace diswot
