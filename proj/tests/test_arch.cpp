#include <doctest.h>

#include <cmath>
#include <set>

#include "diswot/arch.hpp"
#include "diswot/error.hpp"
#include "diswot/network.hpp"
#include "golden.hpp"

using namespace diswot;

namespace {

const SearchSpace s0 = SearchSpace::make(SpaceKind::S0);
const SearchSpace nb = SearchSpace::make(SpaceKind::Nb201);
const SearchSpace s2 = SearchSpace::make(SpaceKind::S2Cifar);
const SearchSpace s2i = SearchSpace::make(SpaceKind::S2ImageNet);

S0Depths d(int a, int b, int c) { return S0Depths{{a, b, c}}; }

// Which stage fields differ between two S2 configs, as a count of loci.
int s2_loci(const S2Config& a, const S2Config& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    n += a.stages[i].kernel != b.stages[i].kernel;
    n += a.stages[i].channels != b.stages[i].channels;
    n += a.stages[i].depth != b.stages[i].depth;
    n += a.stages[i].block != b.stages[i].block;
    n += a.stages[i].stride != b.stages[i].stride;
  }
  return n;
}

}  // namespace

TEST_CASE("S0 parameter counts reproduce the reference table") {
  for (const auto& row : golden::kS0Params) {
    const auto p = count_params(S0Depths{row.depths}, s0);
    CAPTURE(row.kparams);
    CHECK(std::abs(p / 1000.0 - row.kparams) <= 0.01);
  }
  CHECK(count_params(d(7, 1, 3), s0) == 259892);
  CHECK(count_params(d(5, 5, 5), s0) == 472756);
}

TEST_CASE("parameter counts equal the built weight element counts") {
  const InitSpec init{InitScheme::Kaiming, 0.01, 1};
  for (const auto& desc : enumerate_s0()) {
    CHECK(count_params(desc, s0) == build_network(desc, s0, init).weight_count());
  }
  Rng rng(4, 0);
  for (int i = 0; i < 50; ++i) {
    const auto desc = sample_random(s2, rng);
    CHECK(count_params(desc, s2) == build_network(desc, s2, init).weight_count());
  }
  for (int i = 0; i < 20; ++i) {
    const auto desc = sample_random(nb, rng);
    CHECK(count_params(desc, nb) == build_network(desc, nb, init).weight_count());
  }
  CHECK(count_params(d(18, 18, 18), s0) == build_network(d(18, 18, 18), s0, init).weight_count());
}

TEST_CASE("parameters grow with depth") {
  CHECK(count_params(d(1, 1, 1), s0) < count_params(d(7, 7, 7), s0));
}

TEST_CASE("flop accounting") {
  // Two extra stage-1 blocks add four 3x3 16->16 convs at 32x32.
  const std::int64_t one_conv = 2LL * 9 * 16 * 16 * 32 * 32;
  CHECK(one_conv == 4718592);
  CHECK(count_flops(d(3, 1, 1), s0) - count_flops(d(1, 1, 1), s0) == 4 * one_conv);

  const std::int64_t fc = 2LL * 64 * 100;
  const auto f32 = count_flops(d(3, 3, 3), s0, 32, 32);
  const auto f64 = count_flops(d(3, 3, 3), s0, 64, 64);
  CHECK(f64 - fc == 4 * (f32 - fc));

  for (int k = 1; k < 7; k += 2) CHECK(count_flops(d(k, k, k), s0) < count_flops(d(k + 2, k + 2, k + 2), s0));
}

TEST_CASE("depth accounting") {
  CHECK(count_depth(d(18, 18, 18), s0) == 110);
  CHECK(count_depth(d(9, 9, 9), s0) == 56);
  CHECK(count_depth(d(1, 1, 1), s0) == 8);
}

TEST_CASE("NB201 strings round-trip") {
  for (auto s : golden::kNb201Strings) CHECK(serialize_nb201(parse_nb201(s)) == s);
  const auto skip = parse_nb201(
      "|skip_connect~0|+|skip_connect~0|skip_connect~1|+|skip_connect~0|skip_connect~1|skip_connect~2|");
  for (auto op : skip.ops) CHECK(op == Nb201Op::SkipConnect);
  Rng rng(1, 0);
  for (int i = 0; i < 200; ++i) {
    const auto cell = std::get<Nb201Cell>(sample_random(nb, rng));
    CHECK(parse_nb201(serialize_nb201(cell)) == cell);
  }
}

TEST_CASE("NB201 parse errors name the offending token") {
  auto message = [](std::string_view s) {
    try {
      parse_nb201(s);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("|foo_conv~0|+|none~0|none~1|+|none~0|none~1|none~2|").find("foo_conv") != std::string::npos);
  CHECK(message("|none~0|+|none~0|+|none~0|none~1|none~2|") != "no error");
  CHECK(message("|none~1|+|none~0|none~1|+|none~0|none~1|none~2|").find("none~1") != std::string::npos);
  CHECK(message("|none~0|+|none~0|none~1|+|none~0|none~1|none~2") != "no error");
  CHECK(message("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|+") != "no error");
  CHECK(message("") != "no error");
}

TEST_CASE("mutation stays in the space and changes one locus") {
  Rng rng(9, 0);
  SUBCASE("S0") {
    ArchDescriptor a = d(3, 3, 3);
    for (int i = 0; i < 10000; ++i) {
      const ArchDescriptor b = mutate(a, s0, rng);
      REQUIRE(is_candidate(b, s0));
      int diff = 0;
      for (int s = 0; s < 3; ++s) diff += std::get<S0Depths>(a).depths[s] != std::get<S0Depths>(b).depths[s];
      CHECK(diff <= 1);
      a = b;
    }
  }
  SUBCASE("NB201") {
    ArchDescriptor a = max_descriptor(nb);
    for (int i = 0; i < 10000; ++i) {
      const ArchDescriptor b = mutate(a, nb, rng);
      REQUIRE(is_candidate(b, nb));
      int diff = 0;
      for (int e = 0; e < 6; ++e) diff += std::get<Nb201Cell>(a).ops[e] != std::get<Nb201Cell>(b).ops[e];
      CHECK(diff <= 1);
      CHECK_NOTHROW(parse_nb201(serialize_nb201(std::get<Nb201Cell>(b))));
      a = b;
    }
  }
  SUBCASE("S2") {
    for (const SearchSpace* space : {&s2, &s2i}) {
      ArchDescriptor a = sample_random(*space, rng);
      for (int i = 0; i < 10000; ++i) {
        const ArchDescriptor b = mutate(a, *space, rng);
        REQUIRE(is_candidate(b, *space));
        CHECK(s2_loci(std::get<S2Config>(a), std::get<S2Config>(b)) == 1);
        for (const auto& st : std::get<S2Config>(b).stages) {
          CHECK(st.channels % 8 == 0);
          CHECK(st.channels >= 8);
          CHECK(st.channels <= 2048);
        }
        a = b;
      }
    }
  }
}

TEST_CASE("width rounding") {
  CHECK(round_channels(96 * 1.25, s2) == 120);
  CHECK(round_channels(96 * 0.67, s2) == 64);
  CHECK(round_channels(8 * 0.67, s2) == 8);
  CHECK(round_channels(2048 * 1.5, s2) == 2048);
  CHECK(bottleneck_width(256) == 64);
  CHECK(bottleneck_width(40) == 8);
}

TEST_CASE("enumeration and sampling") {
  const auto all = enumerate_s0();
  CHECK(all.size() == 64);
  CHECK(std::set<ArchDescriptor>(all.begin(), all.end()).size() == 64);
  CHECK(std::is_sorted(all.begin(), all.end()));
  CHECK(all.front() == ArchDescriptor(d(1, 1, 1)));
  CHECK(all.back() == ArchDescriptor(d(7, 7, 7)));

  SearchSpace small = s0;
  small.constraints.max_params = 260000;
  Rng rng(2, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto a = sample_random(small, rng);
    CHECK(a != ArchDescriptor(d(3, 3, 3)));
    CHECK(count_params(a, small) <= 260000);
  }
  Rng r1(77, 3), r2(77, 3);
  for (int i = 0; i < 20; ++i) CHECK(sample_random(s2, r1) == sample_random(s2, r2));

  SearchSpace impossible = s0;
  impossible.constraints.max_params = 10;
  CHECK_THROWS_AS(sample_random(impossible, rng), Error);
}

TEST_CASE("S2 ImageNet template respects its budget") {
  Rng rng(5, 0);
  for (int i = 0; i < 200; ++i) {
    const auto a = sample_random(s2i, rng);
    CHECK(count_params(a, s2i) <= 13'000'000);
    CHECK(count_depth(a, s2i) <= 20);
  }
  CHECK(std::get<S2Config>(max_descriptor(s2i)).stages.size() == 4);
  CHECK(std::get<S2Config>(max_descriptor(s2)).stages.size() == 6);
}

TEST_CASE("descriptor validation") {
  CHECK_NOTHROW(validate_descriptor(d(18, 18, 18), s0));
  CHECK_FALSE(is_candidate(d(18, 18, 18), s0));
  CHECK_THROWS_AS(validate_descriptor(d(0, 1, 1), s0), UsageError);
  CHECK_THROWS_AS(validate_descriptor(d(1, 1, 1), nb), UsageError);
  S2Config bad = std::get<S2Config>(max_descriptor(s2));
  bad.stages[0].channels = 36;
  CHECK_THROWS_AS(validate_descriptor(bad, s2), UsageError);
  bad.stages[0].channels = 32;
  bad.stages[0].kernel = 4;
  CHECK_THROWS_AS(validate_descriptor(bad, s2), UsageError);
}

TEST_CASE("ids and JSON round-trip") {
  Rng rng(6, 0);
  for (const SearchSpace* space : {&s0, &nb, &s2, &s2i}) {
    for (int i = 0; i < 30; ++i) {
      const auto a = sample_random(*space, rng);
      const auto id = arch_id(a);
      CHECK(id.find(',') == std::string::npos);
      CHECK(parse_arch_id(id, space->kind) == a);
      const auto [kind, back] = arch_from_json(arch_to_json(a, space->kind));
      CHECK(kind == space->kind);
      CHECK(back == a);
    }
  }
  CHECK(arch_id(d(7, 1, 3)) == "7-1-3");
  CHECK(parse_arch_id("7,1,3", SpaceKind::S0) == ArchDescriptor(d(7, 1, 3)));
  CHECK(parse_arch_id("18,18,18-template", SpaceKind::S0) == ArchDescriptor(d(18, 18, 18)));
  CHECK(arch_to_json(d(7, 1, 3), SpaceKind::S0) == R"({"desc":[7,1,3],"space":"s0"})");
  CHECK_THROWS_AS(arch_from_json(R"({"space":"s0","desc":[1,2]})"), Error);
  CHECK_THROWS_AS(arch_from_json("not json"), Error);
  CHECK_THROWS_AS(parse_arch_id("1-2", SpaceKind::S0), UsageError);
}

TEST_CASE("space names") {
  CHECK(parse_space_kind("s0") == SpaceKind::S0);
  CHECK(parse_space_kind("s1") == SpaceKind::Nb201);
  CHECK(space_name(SpaceKind::S2ImageNet) == "s2_imagenet");
  CHECK_THROWS_AS(parse_space_kind("s9"), UsageError);
}
