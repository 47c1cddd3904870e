#include "diswot/network.hpp"

#include <optional>
#include <variant>
#include <vector>

#include "diswot/error.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace detail {

struct ConvBn {
  std::string name;
  int cin = 0, cout = 0, kernel = 3, stride = 1;
  bool pre_relu = false;  // NB201 ReLU-Conv-BN ordering
  bool norm = true;
};

struct ResidualBlock {
  ConvBn a, b;
  std::optional<ConvBn> shortcut;
};

struct BottleneckBlock {
  ConvBn a, b, c;
  std::optional<ConvBn> shortcut;
};

struct CellBlock {
  std::array<Nb201Op, 6> ops{};
  std::array<std::optional<ConvBn>, 6> convs;
};

struct ReductionBlock {
  ConvBn a, b;
  ConvBn shortcut;  // after 2x2 average pooling, no norm
};

using Block = std::variant<ResidualBlock, BottleneckBlock, CellBlock, ReductionBlock>;

struct Graph {
  ConvBn stem;
  bool stem_relu = true;
  std::vector<Block> blocks;
  bool final_norm_relu = false;  // NB201 "lastact"
  int features = 0;
  int classes = 0;
};

}  // namespace detail

namespace {

using detail::ConvBn;

class Builder {
 public:
  Builder(const InitSpec& init, std::map<std::string, Tensor>& weights)
      : init_(init), weights_(weights) {}

  ConvBn conv(std::string name, int cin, int cout, int k, int stride, bool pre_relu = false,
              bool norm = true) {
    ConvBn c{std::move(name), cin, cout, k, stride, pre_relu, norm};
    add_random(c.name + ".weight", {cout, cin, k, k});
    if (norm) add_norm(c.name + ".bn", cout);
    return c;
  }

  void add_norm(const std::string& name, int channels) {
    weights_.emplace(name + ".gamma", Tensor({channels}, 1.0));
    weights_.emplace(name + ".beta", Tensor({channels}, 0.0));
  }

  void add_random(const std::string& name, Shape shape) {
    weights_.emplace(name, init_tensor(shape, init_, hash_name(name)));
  }

  void add_zeros(const std::string& name, Shape shape) { weights_.emplace(name, Tensor(shape, 0.0)); }

 private:
  const InitSpec& init_;
  std::map<std::string, Tensor>& weights_;
};

detail::ResidualBlock residual(Builder& b, const std::string& name, int cin, int cout, int k,
                               int stride) {
  detail::ResidualBlock blk{b.conv(name + ".conv1", cin, cout, k, stride),
                            b.conv(name + ".conv2", cout, cout, k, 1), std::nullopt};
  if (stride != 1 || cin != cout) blk.shortcut = b.conv(name + ".shortcut", cin, cout, 1, stride);
  return blk;
}

detail::BottleneckBlock bottleneck(Builder& b, const std::string& name, int cin, int cout, int k,
                                   int stride) {
  const int mid = bottleneck_width(cout);
  detail::BottleneckBlock blk{b.conv(name + ".conv1", cin, mid, 1, 1),
                              b.conv(name + ".conv2", mid, mid, k, stride),
                              b.conv(name + ".conv3", mid, cout, 1, 1), std::nullopt};
  if (stride != 1 || cin != cout) blk.shortcut = b.conv(name + ".shortcut", cin, cout, 1, stride);
  return blk;
}

void build_s0(const S0Depths& d, const SearchSpace& space, Builder& b, detail::Graph& g) {
  g.stem = b.conv("stem", 3, space.s0_stem_channels, 3, 1);
  int cin = space.s0_stem_channels;
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < d.depths[s]; ++i) {
      const int stride = (s > 0 && i == 0) ? 2 : 1;
      const std::string name = "stage" + std::to_string(s + 1) + ".block" + std::to_string(i);
      g.blocks.emplace_back(residual(b, name, cin, space.s0_channels[s], 3, stride));
      cin = space.s0_channels[s];
    }
  }
  g.features = cin;
}

void build_nb201(const Nb201Cell& cell, const SearchSpace& space, Builder& b, detail::Graph& g) {
  int c = space.nb201_channels;
  g.stem = b.conv("stem", 3, c, 3, 1);
  g.stem_relu = false;
  for (int stage = 0; stage < 3; ++stage) {
    if (stage > 0) {
      const std::string name = "reduce" + std::to_string(stage);
      detail::ReductionBlock red{b.conv(name + ".conv_a", c, 2 * c, 3, 2, true),
                                 b.conv(name + ".conv_b", 2 * c, 2 * c, 3, 1, true),
                                 b.conv(name + ".shortcut", c, 2 * c, 1, 1, false, false)};
      g.blocks.emplace_back(std::move(red));
      c *= 2;
    }
    for (int n = 0; n < space.cells_per_stage; ++n) {
      const std::string name = "stage" + std::to_string(stage + 1) + ".cell" + std::to_string(n);
      detail::CellBlock blk;
      blk.ops = cell.ops;
      for (std::size_t e = 0; e < 6; ++e) {
        const std::string ename = name + ".edge" + std::to_string(kNb201Edges[e].first) +
                                  std::to_string(kNb201Edges[e].second);
        if (cell.ops[e] == Nb201Op::Conv1x1) blk.convs[e] = b.conv(ename, c, c, 1, 1, true);
        if (cell.ops[e] == Nb201Op::Conv3x3) blk.convs[e] = b.conv(ename, c, c, 3, 1, true);
      }
      g.blocks.emplace_back(std::move(blk));
    }
  }
  g.final_norm_relu = true;
  b.add_norm("lastact.bn", c);
  g.features = c;
}

void build_s2(const S2Config& cfg, const SearchSpace& space, Builder& b, detail::Graph& g) {
  g.stem = b.conv("stem", 3, cfg.stem_channels, space.s2_stem_kernel, space.s2_stem_stride);
  int cin = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const S2Stage& st = cfg.stages[s];
    for (int i = 0; i < st.depth; ++i) {
      const int stride = i == 0 ? st.stride : 1;
      const std::string name = "stage" + std::to_string(s + 1) + ".block" + std::to_string(i);
      if (st.block == BlockKind::Basic) {
        g.blocks.emplace_back(residual(b, name, cin, st.channels, st.kernel, stride));
      } else {
        g.blocks.emplace_back(bottleneck(b, name, cin, st.channels, st.kernel, stride));
      }
      cin = st.channels;
    }
  }
  g.features = cin;
}

// Forward helpers --------------------------------------------------------------

struct Runner {
  const std::map<std::string, Tensor>& w;
  const ReluObserver* observer;

  const Tensor& weight(const std::string& name) const {
    const auto it = w.find(name);
    if (it == w.end()) throw Error("network: missing weight '" + name + "'");
    return it->second;
  }

  Tensor act(const Tensor& t) const {
    Tensor out = relu(t);
    if (observer != nullptr && *observer) (*observer)(out);
    return out;
  }

  Tensor norm(const Tensor& t, const std::string& name) const {
    return batchnorm_batchstats(t, weight(name + ".gamma"), weight(name + ".beta"));
  }

  Tensor conv(const ConvBn& c, const Tensor& x) const {
    Tensor y = conv2d(c.pre_relu ? act(x) : x, weight(c.name + ".weight"), c.stride, c.kernel / 2);
    return c.norm ? norm(y, c.name + ".bn") : y;
  }

  Tensor operator()(const detail::ResidualBlock& blk, const Tensor& x) const {
    Tensor y = conv(blk.b, act(conv(blk.a, x)));
    return act(residual_add(y, blk.shortcut ? conv(*blk.shortcut, x) : x));
  }

  Tensor operator()(const detail::BottleneckBlock& blk, const Tensor& x) const {
    Tensor y = conv(blk.c, act(conv(blk.b, act(conv(blk.a, x)))));
    return act(residual_add(y, blk.shortcut ? conv(*blk.shortcut, x) : x));
  }

  Tensor operator()(const detail::CellBlock& blk, const Tensor& x) const {
    std::array<std::optional<Tensor>, 4> nodes;
    nodes[0] = x;
    for (std::size_t e = 0; e < 6; ++e) {
      const auto [to, from] = kNb201Edges[e];
      const Tensor& in = *nodes[from];
      std::optional<Tensor> out;
      switch (blk.ops[e]) {
        case Nb201Op::None:
          break;
        case Nb201Op::SkipConnect:
          out = in;
          break;
        case Nb201Op::Conv1x1:
        case Nb201Op::Conv3x3:
          out = conv(*blk.convs[e], in);
          break;
        case Nb201Op::AvgPool3x3:
          out = avg_pool2d(in, 3, 1, 1, false);
          break;
      }
      // Node `to` is complete once its last incoming edge (from == to-1) is processed.
      if (out) nodes[to] = nodes[to] ? residual_add(*nodes[to], *out) : std::move(*out);
      if (from == to - 1 && !nodes[to]) nodes[to] = Tensor(x.shape(), 0.0);
    }
    return std::move(*nodes[3]);
  }

  Tensor operator()(const detail::ReductionBlock& blk, const Tensor& x) const {
    Tensor y = conv(blk.b, conv(blk.a, x));
    Tensor sc = conv(blk.shortcut, avg_pool2d(x, 2, 2, 0));
    return residual_add(y, sc);
  }
};

}  // namespace

NetworkInstance build_network(const ArchDescriptor& desc, const SearchSpace& space,
                              const InitSpec& init) {
  validate_descriptor(desc, space);
  if (init.scheme == InitScheme::Gaussian && !(init.gaussian_std > 0.0)) {
    throw UsageError("gaussian_std must be positive");
  }
  NetworkInstance net;
  net.desc_ = desc;
  net.space_ = space;
  net.init_ = init;
  auto graph = std::make_shared<detail::Graph>();
  Builder b(init, net.weights_);
  if (const auto* d = std::get_if<S0Depths>(&desc)) {
    build_s0(*d, space, b, *graph);
  } else if (const auto* c = std::get_if<Nb201Cell>(&desc)) {
    build_nb201(*c, space, b, *graph);
  } else {
    build_s2(std::get<S2Config>(desc), space, b, *graph);
  }
  graph->classes = space.num_classes;
  b.add_random("fc.weight", {graph->classes, graph->features});
  b.add_zeros("fc.bias", {graph->classes});
  net.graph_ = std::move(graph);
  return net;
}

std::int64_t NetworkInstance::weight_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : weights_) n += static_cast<std::int64_t>(t.size());
  return n;
}

ActivationBundle NetworkInstance::forward(const Tensor& images, std::span<const int> labels,
                                          const ReluObserver* observer) const {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw Error("forward: images must be [B,3,H,W], got " + shape_string(images.shape()));
  }
  const Runner run{weights_, observer};
  const detail::Graph& g = *graph_;
  Tensor x = run.conv(g.stem, images);
  if (g.stem_relu) x = run.act(x);
  for (const auto& blk : g.blocks) {
    x = std::visit([&](const auto& b) { return run(b, x); }, blk);
  }
  if (g.final_norm_relu) x = run.act(run.norm(x, "lastact.bn"));

  ActivationBundle bundle;
  bundle.penultimate_features = global_avg_pool(x);
  bundle.pre_gap_map = std::move(x);
  bundle.fc_weight = run.weight("fc.weight");
  const Tensor& bias = run.weight("fc.bias");
  bundle.logits = linear(bundle.penultimate_features, bundle.fc_weight, &bias);
  bundle.fc_weight_grad = fc_weight_grad(bundle.penultimate_features, bundle.logits, labels);
  return bundle;
}

}  // namespace diswot
