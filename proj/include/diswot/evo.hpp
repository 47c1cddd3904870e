#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "diswot/arch.hpp"
#include "diswot/proxy.hpp"

namespace diswot {

using Fitness = std::function<ProxyScore(const ArchDescriptor&)>;

struct EvoConfig {
  int population_size = 20;
  int max_iterations = 100;
  double sample_ratio = 0.5;
  int topk = 3;
  std::uint64_t master_seed = 0;
  // Resample the mutation until the child satisfies the constraints instead
  // of skipping the iteration.
  bool retry_mutation = false;
  // Worker threads for scoring the initial population.
  int jobs = 1;
};

struct Scored {
  ArchDescriptor arch;
  ProxyScore score;
};

struct HistoryEntry {
  int iter = 0;
  double best_score = 0.0;
  ArchDescriptor best_arch;
  int evals = 0;
};

struct SearchState {
  std::vector<Scored> population;
  std::vector<HistoryEntry> history;
  Scored best;
  int evaluations = 0;
};

void validate_evo_config(const EvoConfig& cfg);

SearchState evolve(const SearchSpace& space, const Fitness& fitness, const EvoConfig& cfg);

// `budget` constraint-satisfying samples, keeping the argmax. With
// reject_repeats, already-seen candidates are redrawn (bounded attempts).
SearchState random_search(const SearchSpace& space, const Fitness& fitness, int budget,
                          std::uint64_t seed, bool reject_repeats = false);

// Indices of the k best entries, ties broken by position.
std::vector<std::size_t> get_topk(const std::vector<Scored>& pool, int k);

// Scores each candidate; results are in input order whatever `jobs` is.
std::vector<ProxyScore> score_all(const std::vector<ArchDescriptor>& archs,
                                  const Fitness& fitness, int jobs);

}  // namespace diswot
