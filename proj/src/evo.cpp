#include "diswot/evo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "diswot/error.hpp"
#include "diswot/parallel.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace {

constexpr int kInitAttempts = 10000;

bool better(const Scored& a, const Scored& b) { return a.score.value > b.score.value; }

ArchDescriptor sample_valid(const SearchSpace& space, Rng& rng) {
  for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
    ArchDescriptor d = sample_random(space, rng);
    if (satisfies_constraints(d, space)) return d;
  }
  throw Error("no candidate satisfies the constraints after " + std::to_string(kInitAttempts) +
              " samples");
}

}  // namespace

void validate_evo_config(const EvoConfig& cfg) {
  if (cfg.population_size < 1) throw UsageError("population size must be at least 1");
  if (cfg.max_iterations < 1) throw UsageError("iterations must be at least 1");
  if (!(cfg.sample_ratio > 0.0 && cfg.sample_ratio <= 1.0)) {
    throw UsageError("sample ratio must be in (0, 1]");
  }
  const int pool = static_cast<int>(std::ceil(cfg.sample_ratio * cfg.population_size));
  if (cfg.topk < 1 || cfg.topk > pool) {
    throw UsageError("topk must be in [1, " + std::to_string(pool) + "]");
  }
  if (cfg.jobs < 1) throw UsageError("jobs must be at least 1");
}

std::vector<std::size_t> get_topk(const std::vector<Scored>& pool, int k) {
  if (k < 1) throw Error("get_topk: k must be at least 1");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return better(pool[a], pool[b]); });
  if (idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
  return idx;
}

std::vector<ProxyScore> score_all(const std::vector<ArchDescriptor>& archs,
                                  const Fitness& fitness, int jobs) {
  std::vector<ProxyScore> out(archs.size());
  parallel_for(archs.size(), jobs, [&](std::size_t i) { out[i] = fitness(archs[i]); });
  return out;
}

SearchState evolve(const SearchSpace& space, const Fitness& fitness, const EvoConfig& cfg) {
  validate_evo_config(cfg);
  SearchState state;

  // Stream 0 initializes; iteration i draws from stream i + 1.
  Rng init_rng(cfg.master_seed, 0);
  std::vector<ArchDescriptor> initial;
  initial.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i) initial.push_back(sample_valid(space, init_rng));
  const auto scores = score_all(initial, fitness, cfg.jobs);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    state.population.push_back({initial[i], scores[i]});
    if (i == 0 || better(state.population.back(), state.best)) state.best = state.population.back();
  }
  state.evaluations = cfg.population_size;

  const auto pool_size = static_cast<std::size_t>(std::ceil(cfg.sample_ratio * cfg.population_size));
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    Rng rng(cfg.master_seed, static_cast<std::uint64_t>(iter));
    const std::size_t n = state.population.size();

    // Distinct indices, kept in population order so ties resolve by age.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(pool_size, n);
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
    }
    order.resize(take);
    std::sort(order.begin(), order.end());
    std::vector<Scored> pool;
    for (auto i : order) pool.push_back(state.population[i]);

    const auto top = get_topk(pool, cfg.topk);
    const Scored& parent = pool[top[static_cast<std::size_t>(rng.below(top.size()))]];

    ArchDescriptor child = mutate(parent.arch, space, rng);
    bool ok = satisfies_constraints(child, space);
    for (int attempt = 0; cfg.retry_mutation && !ok && attempt < kInitAttempts; ++attempt) {
      child = mutate(parent.arch, space, rng);
      ok = satisfies_constraints(child, space);
    }
    if (ok) {
      Scored scored{child, fitness(child)};
      ++state.evaluations;
      state.population.push_back(scored);
      if (better(scored, state.best)) state.best = scored;
      if (state.population.size() > static_cast<std::size_t>(cfg.population_size)) {
        // Lowest score goes; the oldest one on a tie.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < state.population.size(); ++i) {
          if (state.population[i].score.value < state.population[worst].score.value) worst = i;
        }
        state.population.erase(state.population.begin() + static_cast<std::ptrdiff_t>(worst));
      }
    }
    state.history.push_back({iter, state.best.score.value, state.best.arch, state.evaluations});
  }
  return state;
}

SearchState random_search(const SearchSpace& space, const Fitness& fitness, int budget,
                          std::uint64_t seed, bool reject_repeats) {
  if (budget < 1) throw UsageError("budget must be at least 1");
  SearchState state;
  Rng rng(seed, 0);
  std::set<ArchDescriptor> seen;
  for (int i = 1; i <= budget; ++i) {
    ArchDescriptor d = sample_valid(space, rng);
    for (int attempt = 0; reject_repeats && seen.count(d) && attempt < kInitAttempts; ++attempt) {
      d = sample_valid(space, rng);
    }
    seen.insert(d);
    Scored s{d, fitness(d)};
    ++state.evaluations;
    if (i == 1 || better(s, state.best)) state.best = s;
    state.history.push_back({i, state.best.score.value, state.best.arch, state.evaluations});
  }
  state.population.push_back(state.best);
  return state;
}

}  // namespace diswot
