#include <doctest.h>

#include "diswot/data.hpp"
#include "diswot/network.hpp"
#include "diswot/ops.hpp"

using namespace diswot;

namespace {
const InitSpec kInit{InitScheme::Kaiming, 0.01, 123};
}

TEST_CASE("S0 forward shapes") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const auto net = build_network(S0Depths{{3, 3, 3}}, s0, kInit);
  const Batch b = synth_batch(4, 3, 32, 32, 100, 1);
  const auto out = net.forward(b.images, b.labels);
  CHECK(out.logits.shape() == Shape{4, 100});
  CHECK(out.pre_gap_map.shape() == Shape{4, 64, 8, 8});
  CHECK(out.penultimate_features.shape() == Shape{4, 64});
  CHECK(out.fc_weight.shape() == Shape{100, 64});
  CHECK(out.fc_weight_grad.shape() == Shape{100, 64});
  CHECK(out.logits.all_finite());
}

TEST_CASE("bundle is internally consistent") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const auto net = build_network(S0Depths{{1, 3, 1}}, s0, kInit);
  const Batch b = synth_batch(3, 3, 32, 32, 100, 2);
  const auto out = net.forward(b.images, b.labels);
  CHECK(out.penultimate_features == global_avg_pool(out.pre_gap_map));
  const Tensor& bias = net.weights().at("fc.bias");
  const Tensor logits = linear(out.penultimate_features, out.fc_weight, &bias);
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == doctest::Approx(out.logits[i]).epsilon(1e-13));
  CHECK(out.fc_weight_grad == fc_weight_grad(out.penultimate_features, out.logits, b.labels));
}

TEST_CASE("building is deterministic") {
  const SearchSpace nb = SearchSpace::make(SpaceKind::Nb201);
  const auto desc = ArchDescriptor(parse_nb201(
      "|nor_conv_3x3~0|+|nor_conv_1x1~0|avg_pool_3x3~1|+|skip_connect~0|none~1|nor_conv_3x3~2|"));
  const Batch b = synth_batch(2, 3, 32, 32, 10, 3);
  const auto a = build_network(desc, nb, kInit).forward(b.images, b.labels);
  const auto c = build_network(desc, nb, kInit).forward(b.images, b.labels);
  CHECK(a.logits == c.logits);
  CHECK(a.logits.shape() == Shape{2, 10});
  CHECK(a.pre_gap_map.shape() == Shape{2, 64, 8, 8});
  InitSpec other = kInit;
  other.seed = 124;
  CHECK_FALSE(build_network(desc, nb, other).forward(b.images, b.labels).logits == a.logits);
}

TEST_CASE("S2 networks forward") {
  const SearchSpace s2 = SearchSpace::make(SpaceKind::S2Cifar);
  Rng rng(1, 0);
  const Batch b = synth_batch(2, 3, 32, 32, 10, 4);
  for (int i = 0; i < 4; ++i) {
    const auto desc = sample_random(s2, rng);
    const auto out = build_network(desc, s2, kInit).forward(b.images, b.labels);
    CHECK(out.logits.shape() == Shape{2, 10});
    CHECK(out.logits.all_finite());
    CHECK(out.pre_gap_map.dim(2) == 4);
  }
  SearchSpace tiny = SearchSpace::make(SpaceKind::S2ImageNet);
  tiny.input_size = 64;
  tiny.num_classes = 7;
  const auto desc = sample_random(tiny, rng);
  const Batch small = synth_batch(2, 3, 64, 64, 7, 5);
  const auto out = build_network(desc, tiny, kInit).forward(small.images, small.labels);
  CHECK(out.logits.shape() == Shape{2, 7});
  CHECK(out.pre_gap_map.dim(2) == 2);
}

TEST_CASE("relu observer sees every activation") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const auto net = build_network(S0Depths{{1, 1, 1}}, s0, kInit);
  const Batch b = synth_batch(2, 3, 32, 32, 100, 6);
  int calls = 0;
  const ReluObserver obs = [&](const Tensor& t) {
    ++calls;
    for (double v : t.values()) CHECK(v >= 0.0);
  };
  net.forward(b.images, b.labels, &obs);
  // stem + two per residual block
  CHECK(calls == 1 + 2 * 3);
}

TEST_CASE("forward rejects mismatched input") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const auto net = build_network(S0Depths{{1, 1, 1}}, s0, kInit);
  const Batch b = synth_batch(2, 3, 32, 32, 100, 7);
  CHECK_THROWS(net.forward(b.images, std::vector<int>{1}));
  CHECK_THROWS(net.forward(Tensor({2, 1, 32, 32}), b.labels));
  CHECK_THROWS(build_network(S0Depths{{1, 1, 1}}, SearchSpace::make(SpaceKind::Nb201), kInit));
}
