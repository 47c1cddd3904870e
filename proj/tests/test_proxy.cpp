#include <doctest.h>

#include <cmath>

#include "diswot/data.hpp"
#include "diswot/error.hpp"
#include "diswot/proxy.hpp"
#include "diswot/scoring.hpp"
#include "oracles/brute.hpp"
#include "support.hpp"

using namespace diswot;
using testing::random_bundle;
using testing::random_tensor;

TEST_CASE("gradcam maps") {
  Rng rng(1, 0);
  auto b = random_bundle(rng, 3, 4, 2, 2, 5);
  SUBCASE("zero activations") {
    b.pre_gap_map = Tensor(b.pre_gap_map.shape(), 0.0);
    const auto g = gradcam_maps(b, WeightSource::FcWeights);
    for (double v : g.maps.values()) CHECK(v == 0.0);
  }
  SUBCASE("one-hot weight selects a channel mean") {
    b.fc_weight = Tensor({1, 4}, {0, 0, 1, 0});
    const auto g = gradcam_maps(b, WeightSource::FcWeights).maps;
    CHECK(g.shape() == Shape{1, 4});
    for (std::int64_t p = 0; p < 4; ++p) {
      double m = 0;
      for (std::int64_t s = 0; s < 3; ++s) m += b.pre_gap_map.at(s, 2, p / 2, p % 2);
      CHECK(g[static_cast<std::size_t>(p)] == doctest::Approx(m / 3.0).epsilon(1e-14));
    }
  }
  SUBCASE("linear in the weights") {
    const Tensor w1 = random_tensor({5, 4}, rng), w2 = random_tensor({5, 4}, rng);
    Tensor sum = w1;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += w2[i];
    b.fc_weight = w1;
    const auto g1 = gradcam_maps(b, WeightSource::FcWeights).maps;
    b.fc_weight = w2;
    const auto g2 = gradcam_maps(b, WeightSource::FcWeights).maps;
    b.fc_weight = sum;
    const auto g = gradcam_maps(b, WeightSource::FcWeights).maps;
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
  }
  SUBCASE("gradient source") {
    const auto g = gradcam_maps(b, WeightSource::FcWeightGrads).maps;
    const auto want = oracle::gradcam(b.pre_gap_map, b.fc_weight_grad);
    for (std::size_t n = 0; n < want.size(); ++n)
      for (std::size_t p = 0; p < want[n].size(); ++p) CHECK(g.at(n, p) == doctest::Approx(want[n][p]));
  }
  b.fc_weight = Tensor({5, 3});
  CHECK_THROWS_AS(gradcam_maps(b, WeightSource::FcWeights), Error);
}

TEST_CASE("gram normalization") {
  const Tensor rows({3, 2}, {1, 0, 0, 0, 3, 4});
  const auto g = gram_similarity(rows, GramNormalization::RowL2).gram;
  for (std::int64_t j = 0; j < 3; ++j) CHECK(g.at(1, j) == 0.0);
  for (std::int64_t i : {0, 2}) {
    double s = 0;
    for (std::int64_t j = 0; j < 3; ++j) s += g.at(i, j) * g.at(i, j);
    CHECK(s == doctest::Approx(1.0));
  }
  const auto m = gram_similarity(rows, GramNormalization::MatrixL2).gram;
  double f = 0;
  for (double v : m.values()) f += v * v;
  CHECK(f == doctest::Approx(1.0));
  CHECK(m.at(0, 2) == m.at(2, 0));
}

TEST_CASE("semantic similarity worked example") {
  GradCamMaps t{Tensor({2, 2}, {1, 0, 0, 1})};
  GradCamMaps s{Tensor({2, 2}, {1, 0, 1, 0})};
  CHECK(semantic_similarity(t, s) == doctest::Approx(0.2928932188134524).epsilon(1e-14));
  CHECK(semantic_similarity(t, t) == 0.0);
  GradCamMaps s3 = t;
  for (double& v : s3.maps.values()) v *= 3.0;
  CHECK(semantic_similarity(t, s3) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(semantic_similarity(t, GradCamMaps{Tensor({3, 2})}), Error);
}

TEST_CASE("relation similarity") {
  Rng rng(2, 0);
  const Tensor a = random_tensor({4, 3, 2, 2}, rng), b = random_tensor({4, 5, 1, 1}, rng);
  CHECK(relation_similarity(a, a) == 0.0);
  Tensor scaled = a;
  for (double& v : scaled.values()) v *= 2.5;
  CHECK(relation_similarity(a, scaled) < 1e-28);
  CHECK(relation_similarity(a, b) == doctest::Approx(relation_similarity(b, a)).epsilon(1e-14));
  CHECK(relation_similarity(a, b) == doctest::Approx(oracle::relation(a, b)).epsilon(1e-12));
  CHECK_THROWS_AS(relation_similarity(a, Tensor({3, 2})), Error);
}

TEST_CASE("diswot score composition") {
  Rng rng(3, 0);
  const auto t = random_bundle(rng, 4, 6, 3, 3, 5);
  const auto s = random_bundle(rng, 4, 8, 2, 2, 5);
  const double ms = semantic_similarity(gradcam_maps(t, WeightSource::FcWeights),
                                        gradcam_maps(s, WeightSource::FcWeights));
  const double mr = relation_similarity(t.pre_gap_map, s.pre_gap_map);
  const auto full = diswot_score(t, s);
  CHECK(full.proxy_name == "diswot");
  CHECK(full.higher_is_better);
  CHECK(full.value == -(ms + mr));
  DiswotOptions only_r;
  only_r.use_semantic = false;
  CHECK(diswot_score(t, s, only_r).value == -mr);
  CHECK(diswot_score(t, s, only_r).proxy_name == "diswot_mr");
  DiswotOptions none;
  none.use_semantic = none.use_relation = false;
  CHECK_THROWS_AS(diswot_score(t, s, none), UsageError);
}

TEST_CASE("identical teacher and student score zero") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const InitSpec init{InitScheme::Kaiming, 0.01, 9};
  const Batch batch = synth_batch(4, 3, 32, 32, 100, 1);
  const auto teacher = build_network(S0Depths{{3, 1, 1}}, s0, init);
  const auto score = diswot_score(teacher, S0Depths{{3, 1, 1}}, s0, batch, init);
  CHECK(score.value == 0.0);
  const auto other = diswot_score(teacher, S0Depths{{1, 1, 1}}, s0, batch, init);
  CHECK(other.value < 0.0);
}

TEST_CASE("nwot kernel") {
  SUBCASE("complementary codes") {
    NwotKernel k(2);
    k.add(Tensor({2, 5}, {1, 0, 2, 0, 3, 0, 1, 0, 4, 0}));
    CHECK(k.kernel() == Tensor({2, 2}, {5, 0, 0, 5}));
    CHECK(nwot_logdet(k.kernel()) == doctest::Approx(2.0 * std::log(5.0 + 1e-6)).epsilon(1e-14));
  }
  SUBCASE("identical samples are worse but finite") {
    NwotKernel same(2), diff(2);
    same.add(Tensor({2, 4}, {1, 0, 1, 0, 1, 0, 1, 0}));
    diff.add(Tensor({2, 4}, {1, 0, 1, 0, 0, 1, 0, 1}));
    const double a = nwot_logdet(same.kernel()), b = nwot_logdet(diff.kernel());
    CHECK(std::isfinite(a));
    CHECK(a < b);
  }
  SUBCASE("accumulates across layers and ignores sample order") {
    Rng rng(4, 0);
    const Tensor l1 = testing::random_tensor({3, 7}, rng), l2 = testing::random_tensor({3, 2, 2, 2}, rng);
    NwotKernel k(3);
    k.add(l1);
    k.add(l2);
    for (std::int64_t i = 0; i < 3; ++i)
      for (std::int64_t j = 0; j < 3; ++j) {
        double agree = 0;
        for (std::int64_t u = 0; u < 7; ++u) agree += (l1.at(i, u) > 0) == (l1.at(j, u) > 0);
        for (std::size_t u = 0; u < 8; ++u) agree += (l2[i * 8 + u] > 0) == (l2[j * 8 + u] > 0);
        CHECK(k.kernel().at(i, j) == agree);
      }
    const int perm[3] = {2, 0, 1};
    Tensor p1({3, 7}), p2({3, 2, 2, 2});
    for (int i = 0; i < 3; ++i) {
      for (int u = 0; u < 7; ++u) p1.at(i, u) = l1.at(perm[i], u);
      for (int u = 0; u < 8; ++u) p2[i * 8 + u] = l2[perm[i] * 8 + u];
    }
    NwotKernel kp(3);
    kp.add(p1);
    kp.add(p2);
    CHECK(nwot_logdet(kp.kernel()) == doctest::Approx(nwot_logdet(k.kernel())).epsilon(1e-12));
  }
  SUBCASE("network score") {
    const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
    const auto net = build_network(S0Depths{{1, 1, 1}}, s0, {});
    const auto score = nwot_score(net, synth_batch(4, 3, 32, 32, 100, 2));
    CHECK(score.proxy_name == "nwot");
    CHECK(std::isfinite(score.value));
  }
}

TEST_CASE("kd distances match the brute-force oracles") {
  Rng rng(5, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t b = 2 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t hw = 1 + static_cast<std::int64_t>(rng.below(3));
    const auto t = random_bundle(rng, b, 2 + static_cast<std::int64_t>(rng.below(3)), hw, hw, n);
    const auto s = random_bundle(rng, b, 2 + static_cast<std::int64_t>(rng.below(3)), hw, hw, n);
    const double rho = 0.5 + 4.0 * rng.uniform();
    const Tensor proj = fitnets_projection(s.penultimate_features.dim(1), t.penultimate_features.dim(1));
    const bool same = s.penultimate_features.dim(1) == t.penultimate_features.dim(1);
    CHECK(kd_raw_distance(KdKind::KdKl, t, s, rho) == doctest::Approx(oracle::kd_kl(t.logits, s.logits, rho)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::FitNets, t, s) ==
          doctest::Approx(oracle::fitnets(t.penultimate_features, s.penultimate_features, same ? nullptr : &proj)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::At, t, s) == doctest::Approx(oracle::at(t.pre_gap_map, s.pre_gap_map)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::Sp, t, s) == doctest::Approx(oracle::relation(t.pre_gap_map, s.pre_gap_map)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::Cc, t, s) == doctest::Approx(oracle::cc(t.penultimate_features, s.penultimate_features)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::Rkd, t, s) == doctest::Approx(oracle::rkd(t.penultimate_features, s.penultimate_features)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::Nst, t, s) == doctest::Approx(oracle::nst(t.pre_gap_map, s.pre_gap_map)).epsilon(1e-10));
    CHECK(kd_raw_distance(KdKind::Pkt, t, s) ==
          doctest::Approx(oracle::pkt(t.penultimate_features, s.penultimate_features, kPktEpsilon)).epsilon(1e-10));
  }
}

TEST_CASE("kd distances vanish on identical bundles") {
  Rng rng(6, 0);
  const auto t = random_bundle(rng, 4, 3, 2, 2, 5);
  for (KdKind k : kAllKdKinds) {
    CAPTURE(kd_kind_name(k));
    const auto score = kd_distance(k, t, t, 2.0);
    CHECK(score.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(score.value <= 0.0);
    CHECK(score.higher_is_better);
    CHECK(score.proxy_name == kd_kind_name(k));
  }
}

TEST_CASE("kd distance errors") {
  Rng rng(7, 0);
  const auto t = random_bundle(rng, 4, 3, 2, 2, 5);
  const auto s = random_bundle(rng, 3, 3, 2, 2, 5);
  CHECK_THROWS_AS(kd_distance(KdKind::Sp, t, s), Error);
  CHECK_THROWS_AS(kd_distance(KdKind::KdKl, t, t, 0.0), Error);
  const auto u = random_bundle(rng, 4, 3, 3, 3, 5);
  CHECK_THROWS_AS(kd_distance(KdKind::At, t, u), Error);
  CHECK_THROWS_AS(kd_distance(KdKind::Nst, t, u), Error);
}

TEST_CASE("fitnets projection is fixed") {
  CHECK(fitnets_projection(4, 6) == fitnets_projection(4, 6));
  CHECK(fitnets_projection(4, 6).shape() == Shape{6, 4});
}

TEST_CASE("cost proxies") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  const auto p = cost_proxy(CostKind::Params, S0Depths{{7, 1, 3}}, s0);
  CHECK(p.proxy_name == "params");
  CHECK(p.value == 259892.0);
  const auto f = cost_proxy(CostKind::Flops, S0Depths{{7, 1, 3}}, s0);
  CHECK(f.value == static_cast<double>(count_flops(S0Depths{{7, 1, 3}}, s0)));
  CHECK(f.higher_is_better);
}

TEST_CASE("evaluator scores every proxy and ignores thread count") {
  const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
  ScoringConfig cfg;
  cfg.proxies = known_proxies();
  const ProxyEvaluator eval(s0, S0Depths{{3, 3, 3}}, synth_batch(4, 3, 32, 32, 100, 5), cfg, 11);
  const auto scores = eval.score(S0Depths{{1, 3, 1}});
  REQUIRE(scores.size() == known_proxies().size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(scores[i].proxy_name == known_proxies()[i]);
    CHECK(std::isfinite(scores[i].value));
  }
  CHECK(eval.score(S0Depths{{1, 3, 1}})[0].value == scores[0].value);
  // same shape as the teacher but independently initialised, so not a zero distance
  const double self = eval.score(S0Depths{{3, 3, 3}})[0].value;
  CHECK(self <= 0.0);
  CHECK(self > -4.0);
  CHECK_THROWS_AS(check_proxy_name("snip"), UsageError);
}
