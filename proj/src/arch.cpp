#include "diswot/arch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diswot/error.hpp"

namespace diswot {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kMaxSampleAttempts = 10000;
constexpr int kMaxMutationAttempts = 1000;

std::int64_t conv_params(std::int64_t cin, std::int64_t cout, std::int64_t k) {
  return cin * cout * k * k;
}
std::int64_t bn_params(std::int64_t c) { return 2 * c; }
std::int64_t conv_out(std::int64_t size, int k, int stride) { return (size + 2 * (k / 2) - k) / stride + 1; }
std::int64_t conv_flops(std::int64_t cin, std::int64_t cout, std::int64_t k, std::int64_t ho,
                        std::int64_t wo) {
  return 2 * cin * k * k * cout * ho * wo;
}

const SearchSpace& require_kind(const SearchSpace& space, bool ok, const char* what) {
  if (!ok) {
    throw UsageError(std::string(what) + " descriptor does not belong to space '" +
                     std::string(space_name(space.kind)) + "'");
  }
  return space;
}

bool is_s2(SpaceKind k) { return k == SpaceKind::S2Cifar || k == SpaceKind::S2ImageNet; }

}  // namespace

std::string_view space_name(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::S0:
      return "s0";
    case SpaceKind::Nb201:
      return "nb201";
    case SpaceKind::S2Cifar:
      return "s2_cifar";
    case SpaceKind::S2ImageNet:
      return "s2_imagenet";
  }
  return "unknown";
}

SpaceKind parse_space_kind(std::string_view name) {
  if (name == "s0") return SpaceKind::S0;
  if (name == "nb201" || name == "s1") return SpaceKind::Nb201;
  if (name == "s2_cifar") return SpaceKind::S2Cifar;
  if (name == "s2_imagenet") return SpaceKind::S2ImageNet;
  throw UsageError("unknown search space '" + std::string(name) +
                   "' (expected s0, nb201, s2_cifar or s2_imagenet)");
}

std::string_view nb201_op_name(Nb201Op op) {
  switch (op) {
    case Nb201Op::None:
      return "none";
    case Nb201Op::SkipConnect:
      return "skip_connect";
    case Nb201Op::Conv1x1:
      return "nor_conv_1x1";
    case Nb201Op::Conv3x3:
      return "nor_conv_3x3";
    case Nb201Op::AvgPool3x3:
      return "avg_pool_3x3";
  }
  return "unknown";
}

std::string_view block_kind_name(BlockKind kind) {
  return kind == BlockKind::Basic ? "basic" : "bottleneck";
}

SearchSpace SearchSpace::make(SpaceKind kind) {
  SearchSpace s;
  s.kind = kind;
  switch (kind) {
    case SpaceKind::S0:
      s.num_classes = 100;
      s.input_size = 32;
      break;
    case SpaceKind::Nb201:
      s.num_classes = 10;
      s.input_size = 32;
      break;
    case SpaceKind::S2Cifar:
      s.num_classes = 10;
      s.input_size = 32;
      s.s2_stem_kernel = 3;
      s.s2_stem_stride = 1;
      s.s2_stem_channels = 32;
      s.s2_stages = {{32, 1}, {64, 2}, {64, 1}, {128, 2}, {128, 2}, {256, 1}};
      s.s2_max_stage_depth = 3;
      break;
    case SpaceKind::S2ImageNet:
      s.num_classes = 1000;
      s.input_size = 224;
      s.s2_stem_kernel = 7;
      s.s2_stem_stride = 2;
      s.s2_stem_channels = 64;
      s.s2_stages = {{64, 2}, {128, 2}, {256, 2}, {512, 2}};
      s.s2_max_stage_depth = 4;
      s.constraints.max_params = 13'000'000;
      s.constraints.max_depth = 20;
      break;
  }
  return s;
}

int bottleneck_width(int channels) {
  const int quarter = static_cast<int>(std::lround(channels / 4.0 / 8.0)) * 8;
  return std::max(8, quarter);
}

int round_channels(double channels, const SearchSpace& space) {
  const int c = static_cast<int>(std::lround(channels / 8.0)) * 8;
  return std::clamp(c, space.s2_min_channels, space.s2_max_channels);
}

void validate_descriptor(const ArchDescriptor& desc, const SearchSpace& space) {
  std::visit(
      overloaded{
          [&](const S0Depths& d) {
            require_kind(space, space.kind == SpaceKind::S0, "S0");
            for (int depth : d.depths) {
              if (depth < 1) throw UsageError("S0 stage depth must be >= 1");
            }
          },
          [&](const Nb201Cell&) { require_kind(space, space.kind == SpaceKind::Nb201, "NB201"); },
          [&](const S2Config& c) {
            require_kind(space, is_s2(space.kind), "S2");
            if (c.stages.size() != space.s2_stages.size()) {
              throw UsageError("S2 descriptor has " + std::to_string(c.stages.size()) +
                               " stages, space expects " + std::to_string(space.s2_stages.size()));
            }
            auto check_channels = [&](int ch, const std::string& where) {
              if (ch % 8 != 0 || ch < space.s2_min_channels || ch > space.s2_max_channels) {
                throw UsageError(where + " channels " + std::to_string(ch) +
                                 " must be a multiple of 8 in [" +
                                 std::to_string(space.s2_min_channels) + ", " +
                                 std::to_string(space.s2_max_channels) + "]");
              }
            };
            check_channels(c.stem_channels, "stem");
            for (std::size_t i = 0; i < c.stages.size(); ++i) {
              const auto& st = c.stages[i];
              const std::string where = "stage " + std::to_string(i + 1);
              check_channels(st.channels, where);
              if (std::find(space.s2_kernel_choices.begin(), space.s2_kernel_choices.end(),
                            st.kernel) == space.s2_kernel_choices.end()) {
                throw UsageError(where + " kernel " + std::to_string(st.kernel) + " not allowed");
              }
              if (st.depth < 1 || st.depth > space.s2_max_stage_depth) {
                throw UsageError(where + " depth " + std::to_string(st.depth) + " outside [1, " +
                                 std::to_string(space.s2_max_stage_depth) + "]");
              }
              if (st.stride != space.s2_stages[i].stride) {
                throw UsageError(where + " stride " + std::to_string(st.stride) +
                                 " differs from the space schedule");
              }
            }
          },
      },
      desc);
}

bool is_candidate(const ArchDescriptor& desc, const SearchSpace& space) {
  try {
    validate_descriptor(desc, space);
  } catch (const UsageError&) {
    return false;
  }
  if (const auto* d = std::get_if<S0Depths>(&desc)) {
    for (int depth : d->depths) {
      if (std::find(space.s0_depth_choices.begin(), space.s0_depth_choices.end(), depth) ==
          space.s0_depth_choices.end()) {
        return false;
      }
    }
  }
  if (const auto* c = std::get_if<S2Config>(&desc)) {
    if (c->stem_channels != space.s2_stem_channels) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Cost accounting. Kept independent of the network builder so that the
// builder's weight inventory is a genuine cross-check.

namespace {

struct Cost {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::int64_t depth = 0;
};

Cost s0_cost(const S0Depths& d, const SearchSpace& space, std::int64_t h, std::int64_t w) {
  Cost cost;
  const std::int64_t stem = space.s0_stem_channels;
  cost.params += conv_params(3, stem, 3) + bn_params(stem);
  cost.flops += conv_flops(3, stem, 3, h, w);
  cost.depth += 1;
  std::int64_t cin = stem;
  for (int s = 0; s < 3; ++s) {
    const std::int64_t c = space.s0_channels[s];
    for (int b = 0; b < d.depths[s]; ++b) {
      const int stride = (s > 0 && b == 0) ? 2 : 1;
      h = conv_out(h, 3, stride);
      w = conv_out(w, 3, stride);
      cost.params += conv_params(cin, c, 3) + bn_params(c) + conv_params(c, c, 3) + bn_params(c);
      cost.flops += conv_flops(cin, c, 3, h, w) + conv_flops(c, c, 3, h, w);
      if (stride != 1 || cin != c) {
        cost.params += conv_params(cin, c, 1) + bn_params(c);
        cost.flops += conv_flops(cin, c, 1, h, w);
      }
      cost.depth += 2;
      cin = c;
    }
  }
  cost.params += cin * space.num_classes + space.num_classes;
  cost.flops += 2 * cin * space.num_classes;
  cost.depth += 1;
  return cost;
}

std::int64_t nb201_cell_depth(const Nb201Cell& cell) {
  std::array<std::int64_t, 4> node{0, 0, 0, 0};
  for (std::size_t e = 0; e < 6; ++e) {
    const auto [to, from] = kNb201Edges[e];
    const Nb201Op op = cell.ops[e];
    if (op == Nb201Op::None) continue;
    const bool conv = (op == Nb201Op::Conv1x1 || op == Nb201Op::Conv3x3);
    node[to] = std::max(node[to], node[from] + (conv ? 1 : 0));
  }
  return node[3];
}

Cost nb201_cost(const Nb201Cell& cell, const SearchSpace& space, std::int64_t h, std::int64_t w) {
  Cost cost;
  std::int64_t c = space.nb201_channels;
  cost.params += conv_params(3, c, 3) + bn_params(c);
  cost.flops += conv_flops(3, c, 3, h, w);
  cost.depth += 1;
  const std::int64_t cell_depth = nb201_cell_depth(cell);
  for (int stage = 0; stage < 3; ++stage) {
    if (stage > 0) {
      const std::int64_t cout = 2 * c;
      h = conv_out(h, 3, 2);
      w = conv_out(w, 3, 2);
      cost.params += conv_params(c, cout, 3) + bn_params(cout) + conv_params(cout, cout, 3) +
                     bn_params(cout) + conv_params(c, cout, 1);
      cost.flops += conv_flops(c, cout, 3, h, w) + conv_flops(cout, cout, 3, h, w) +
                    conv_flops(c, cout, 1, h, w);
      cost.depth += 2;
      c = cout;
    }
    for (int n = 0; n < space.cells_per_stage; ++n) {
      for (Nb201Op op : cell.ops) {
        if (op == Nb201Op::Conv1x1) {
          cost.params += conv_params(c, c, 1) + bn_params(c);
          cost.flops += conv_flops(c, c, 1, h, w);
        } else if (op == Nb201Op::Conv3x3) {
          cost.params += conv_params(c, c, 3) + bn_params(c);
          cost.flops += conv_flops(c, c, 3, h, w);
        }
      }
      cost.depth += cell_depth;
    }
  }
  cost.params += bn_params(c);
  cost.params += c * space.num_classes + space.num_classes;
  cost.flops += 2 * c * space.num_classes;
  cost.depth += 1;
  return cost;
}

Cost s2_cost(const S2Config& cfg, const SearchSpace& space, std::int64_t h, std::int64_t w) {
  Cost cost;
  const int sk = space.s2_stem_kernel;
  h = conv_out(h, sk, space.s2_stem_stride);
  w = conv_out(w, sk, space.s2_stem_stride);
  std::int64_t cin = cfg.stem_channels;
  cost.params += conv_params(3, cin, sk) + bn_params(cin);
  cost.flops += conv_flops(3, cin, sk, h, w);
  cost.depth += 1;
  for (const S2Stage& st : cfg.stages) {
    const std::int64_t c = st.channels;
    const int k = st.kernel;
    for (int b = 0; b < st.depth; ++b) {
      const int stride = b == 0 ? st.stride : 1;
      const std::int64_t hi = h, wi = w;
      h = conv_out(h, k, stride);
      w = conv_out(w, k, stride);
      if (st.block == BlockKind::Basic) {
        cost.params += conv_params(cin, c, k) + bn_params(c) + conv_params(c, c, k) + bn_params(c);
        cost.flops += conv_flops(cin, c, k, h, w) + conv_flops(c, c, k, h, w);
        cost.depth += 2;
      } else {
        const std::int64_t mid = bottleneck_width(st.channels);
        cost.params += conv_params(cin, mid, 1) + bn_params(mid) + conv_params(mid, mid, k) +
                       bn_params(mid) + conv_params(mid, c, 1) + bn_params(c);
        cost.flops += conv_flops(cin, mid, 1, hi, wi) + conv_flops(mid, mid, k, h, w) +
                      conv_flops(mid, c, 1, h, w);
        cost.depth += 3;
      }
      if (stride != 1 || cin != c) {
        cost.params += conv_params(cin, c, 1) + bn_params(c);
        cost.flops += conv_flops(cin, c, 1, h, w);
      }
      cin = c;
    }
  }
  cost.params += cin * space.num_classes + space.num_classes;
  cost.flops += 2 * cin * space.num_classes;
  cost.depth += 1;
  return cost;
}

Cost cost_of(const ArchDescriptor& desc, const SearchSpace& space, std::int64_t h, std::int64_t w) {
  validate_descriptor(desc, space);
  return std::visit(overloaded{
                        [&](const S0Depths& d) { return s0_cost(d, space, h, w); },
                        [&](const Nb201Cell& c) { return nb201_cost(c, space, h, w); },
                        [&](const S2Config& c) { return s2_cost(c, space, h, w); },
                    },
                    desc);
}

}  // namespace

std::int64_t count_params(const ArchDescriptor& desc, const SearchSpace& space) {
  return cost_of(desc, space, space.input_size, space.input_size).params;
}

std::int64_t count_flops(const ArchDescriptor& desc, const SearchSpace& space, int input_h,
                         int input_w) {
  return cost_of(desc, space, input_h, input_w).flops;
}

std::int64_t count_flops(const ArchDescriptor& desc, const SearchSpace& space) {
  return count_flops(desc, space, space.input_size, space.input_size);
}

std::int64_t count_depth(const ArchDescriptor& desc, const SearchSpace& space) {
  return cost_of(desc, space, space.input_size, space.input_size).depth;
}

bool satisfies_constraints(const ArchDescriptor& desc, const SearchSpace& space) {
  const auto& c = space.constraints;
  if (!c.max_params && !c.max_flops && !c.max_depth) return true;
  const Cost cost = cost_of(desc, space, space.input_size, space.input_size);
  if (c.max_params && cost.params > *c.max_params) return false;
  if (c.max_flops && cost.flops > *c.max_flops) return false;
  if (c.max_depth && cost.depth > *c.max_depth) return false;
  return true;
}

// ---------------------------------------------------------------------------
// NB201 string form: |op~0|+|op~0|op~1|+|op~0|op~1|op~2|

Nb201Cell parse_nb201(std::string_view s) {
  Nb201Cell cell;
  std::vector<std::string_view> groups;
  std::size_t start = 0;
  while (true) {
    const std::size_t plus = s.find('+', start);
    groups.push_back(s.substr(start, plus == std::string_view::npos ? plus : plus - start));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  if (groups.size() != 3) {
    throw UsageError("NB201 string must have 3 '+'-separated node groups, got " +
                     std::to_string(groups.size()) + " in '" + std::string(s) + "'");
  }
  std::size_t edge = 0;
  for (std::size_t node = 0; node < 3; ++node) {
    std::string_view g = groups[node];
    if (g.size() < 2 || g.front() != '|' || g.back() != '|') {
      throw UsageError("NB201 node group '" + std::string(g) + "' must start and end with '|'");
    }
    g = g.substr(1, g.size() - 2);
    std::vector<std::string_view> edges;
    std::size_t p = 0;
    while (true) {
      const std::size_t bar = g.find('|', p);
      edges.push_back(g.substr(p, bar == std::string_view::npos ? bar : bar - p));
      if (bar == std::string_view::npos) break;
      p = bar + 1;
    }
    if (edges.size() != node + 1) {
      throw UsageError("NB201 node " + std::to_string(node + 1) + " needs " +
                       std::to_string(node + 1) + " edges, got " + std::to_string(edges.size()) +
                       " in group '|" + std::string(g) + "|'");
    }
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const std::string_view tok = edges[j];
      const std::size_t tilde = tok.find('~');
      if (tilde == std::string_view::npos) {
        throw UsageError("NB201 edge token '" + std::string(tok) + "' lacks '~<source>'");
      }
      const std::string_view name = tok.substr(0, tilde);
      const std::string_view src = tok.substr(tilde + 1);
      const auto it = std::find_if(kNb201Ops.begin(), kNb201Ops.end(),
                                   [&](Nb201Op op) { return nb201_op_name(op) == name; });
      if (it == kNb201Ops.end()) {
        throw UsageError("NB201 edge token '" + std::string(tok) + "' has unknown op '" +
                         std::string(name) + "'");
      }
      if (src != std::to_string(j)) {
        throw UsageError("NB201 edge token '" + std::string(tok) + "' must take source " +
                         std::to_string(j));
      }
      cell.ops[edge++] = *it;
    }
  }
  return cell;
}

std::string serialize_nb201(const Nb201Cell& cell) {
  std::string out;
  std::size_t edge = 0;
  for (int node = 1; node <= 3; ++node) {
    if (node > 1) out += '+';
    out += '|';
    for (int j = 0; j < node; ++j) {
      out += nb201_op_name(cell.ops[edge++]);
      out += '~';
      out += std::to_string(j);
      out += '|';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and mutation.

namespace {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

ArchDescriptor sample_unconstrained(const SearchSpace& space, Rng& rng) {
  switch (space.kind) {
    case SpaceKind::S0: {
      S0Depths d;
      for (int& depth : d.depths) depth = pick(space.s0_depth_choices, rng);
      return d;
    }
    case SpaceKind::Nb201: {
      Nb201Cell c;
      for (auto& op : c.ops) op = kNb201Ops[rng.below(kNb201Ops.size())];
      return c;
    }
    case SpaceKind::S2Cifar:
    case SpaceKind::S2ImageNet: {
      S2Config cfg;
      cfg.stem_channels = space.s2_stem_channels;
      for (const auto& tmpl : space.s2_stages) {
        S2Stage st;
        st.block = rng.below(2) == 0 ? BlockKind::Basic : BlockKind::Bottleneck;
        st.kernel = pick(space.s2_kernel_choices, rng);
        const int lo = std::max(space.s2_min_channels, tmpl.channels / 2) / 8;
        const int hi = std::min(space.s2_max_channels, tmpl.channels * 2) / 8;
        st.channels = 8 * (lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
        st.depth = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(space.s2_max_stage_depth)));
        st.stride = tmpl.stride;
        cfg.stages.push_back(st);
      }
      return cfg;
    }
  }
  throw Error("unknown search space");
}

}  // namespace

ArchDescriptor sample_random(const SearchSpace& space, Rng& rng) {
  for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
    ArchDescriptor d = sample_unconstrained(space, rng);
    if (satisfies_constraints(d, space)) return d;
  }
  throw Error("sample_random: no architecture satisfying the constraints found after " +
              std::to_string(kMaxSampleAttempts) + " draws");
}

std::vector<ArchDescriptor> enumerate_s0() {
  const SearchSpace space = SearchSpace::make(SpaceKind::S0);
  std::vector<ArchDescriptor> out;
  for (int a : space.s0_depth_choices) {
    for (int b : space.s0_depth_choices) {
      for (int c : space.s0_depth_choices) out.push_back(S0Depths{{a, b, c}});
    }
  }
  return out;
}

ArchDescriptor mutate(const ArchDescriptor& desc, const SearchSpace& space, Rng& rng) {
  validate_descriptor(desc, space);
  for (int attempt = 0; attempt < kMaxMutationAttempts; ++attempt) {
    ArchDescriptor child = desc;
    if (auto* d = std::get_if<S0Depths>(&child)) {
      d->depths[rng.below(3)] = pick(space.s0_depth_choices, rng);
    } else if (auto* c = std::get_if<Nb201Cell>(&child)) {
      c->ops[rng.below(6)] = kNb201Ops[rng.below(kNb201Ops.size())];
    } else if (auto* cfg = std::get_if<S2Config>(&child)) {
      S2Stage& st = cfg->stages[rng.below(cfg->stages.size())];
      switch (rng.below(3)) {
        case 0: {
          std::vector<int> others;
          for (int k : space.s2_kernel_choices) {
            if (k != st.kernel) others.push_back(k);
          }
          if (!others.empty()) st.kernel = pick(others, rng);
          break;
        }
        case 1:
          st.channels = round_channels(
              st.channels * kWidthMutationFactors[rng.below(kWidthMutationFactors.size())], space);
          break;
        default:
          st.depth += rng.below(2) == 0 ? 1 : -1;
          break;
      }
    }
    // a width step can round back to the parent's channel count; that is not a mutation
    if (std::holds_alternative<S2Config>(child) && child == desc) continue;
    if (is_candidate(child, space)) return child;
  }
  throw Error("mutate: no valid mutation found after " + std::to_string(kMaxMutationAttempts) +
              " attempts");
}

ArchDescriptor max_descriptor(const SearchSpace& space) {
  switch (space.kind) {
    case SpaceKind::S0: {
      const int m = *std::max_element(space.s0_depth_choices.begin(), space.s0_depth_choices.end());
      return S0Depths{{m, m, m}};
    }
    case SpaceKind::Nb201: {
      Nb201Cell c;
      c.ops.fill(Nb201Op::Conv3x3);
      return c;
    }
    case SpaceKind::S2Cifar:
    case SpaceKind::S2ImageNet: {
      S2Config cfg;
      cfg.stem_channels = space.s2_stem_channels;
      for (const auto& t : space.s2_stages) {
        cfg.stages.push_back({BlockKind::Basic, space.s2_kernel_choices.front(), t.channels,
                              space.s2_max_stage_depth, t.stride});
      }
      return cfg;
    }
  }
  throw Error("unknown search space");
}

// ---------------------------------------------------------------------------
// Textual ids.

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t p = 0;
  while (true) {
    const std::size_t q = s.find(sep, p);
    out.emplace_back(s.substr(p, q == std::string_view::npos ? q : q - p));
    if (q == std::string_view::npos) break;
    p = q + 1;
  }
  return out;
}

int parse_int(std::string_view s, std::string_view context) {
  if (s.empty()) throw UsageError("empty number in '" + std::string(context) + "'");
  int v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9' || v > 100'000'000) {
      throw UsageError("bad number '" + std::string(s) + "' in '" + std::string(context) + "'");
    }
    v = v * 10 + (ch - '0');
  }
  return v;
}

}  // namespace

std::string arch_id(const ArchDescriptor& desc) {
  return std::visit(
      overloaded{
          [](const S0Depths& d) {
            return std::to_string(d.depths[0]) + "-" + std::to_string(d.depths[1]) + "-" +
                   std::to_string(d.depths[2]);
          },
          [](const Nb201Cell& c) { return serialize_nb201(c); },
          [](const S2Config& cfg) {
            std::string s = "c" + std::to_string(cfg.stem_channels);
            for (const auto& st : cfg.stages) {
              s += "_" + std::string(block_kind_name(st.block)) + "-k" + std::to_string(st.kernel) +
                   "-c" + std::to_string(st.channels) + "-d" + std::to_string(st.depth) + "-s" +
                   std::to_string(st.stride);
            }
            return s;
          },
      },
      desc);
}

ArchDescriptor parse_arch_id(std::string_view id, SpaceKind kind) {
  switch (kind) {
    case SpaceKind::S0: {
      // Accept "7-1-3", "7,1,3" and a trailing "-template" label.
      std::string s(id);
      const std::string suffix = "-template";
      if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        s.resize(s.size() - suffix.size());
      }
      std::replace(s.begin(), s.end(), ',', '-');
      const auto parts = split(s, '-');
      if (parts.size() != 3) throw UsageError("S0 id '" + std::string(id) + "' must be d1-d2-d3");
      S0Depths d;
      for (int i = 0; i < 3; ++i) d.depths[i] = parse_int(parts[i], id);
      return d;
    }
    case SpaceKind::Nb201:
      return parse_nb201(id);
    case SpaceKind::S2Cifar:
    case SpaceKind::S2ImageNet: {
      const auto parts = split(id, '_');
      if (parts.empty() || parts[0].size() < 2 || parts[0][0] != 'c') {
        throw UsageError("S2 id '" + std::string(id) + "' must start with c<stem channels>");
      }
      S2Config cfg;
      cfg.stem_channels = parse_int(std::string_view(parts[0]).substr(1), id);
      for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto f = split(parts[i], '-');
        if (f.size() != 5 || f[1].size() < 2 || f[1][0] != 'k' || f[2][0] != 'c' ||
            f[3][0] != 'd' || f[4][0] != 's') {
          throw UsageError("S2 stage token '" + parts[i] + "' must be <block>-k<k>-c<c>-d<d>-s<s>");
        }
        S2Stage st;
        if (f[0] == "basic") {
          st.block = BlockKind::Basic;
        } else if (f[0] == "bottleneck") {
          st.block = BlockKind::Bottleneck;
        } else {
          throw UsageError("S2 stage token '" + parts[i] + "' has unknown block '" + f[0] + "'");
        }
        st.kernel = parse_int(std::string_view(f[1]).substr(1), id);
        st.channels = parse_int(std::string_view(f[2]).substr(1), id);
        st.depth = parse_int(std::string_view(f[3]).substr(1), id);
        st.stride = parse_int(std::string_view(f[4]).substr(1), id);
        cfg.stages.push_back(st);
      }
      return cfg;
    }
  }
  throw Error("unknown search space");
}

}  // namespace diswot
