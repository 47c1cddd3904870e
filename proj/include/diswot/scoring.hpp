#pragma once

// Scores candidate students against one fixed teacher on one batch, for any
// mix of proxies. Immutable after construction; score() may be called from
// several threads at once.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diswot/arch.hpp"
#include "diswot/data.hpp"
#include "diswot/network.hpp"
#include "diswot/proxy.hpp"

namespace diswot {

const std::vector<std::string>& known_proxies();
// Throws UsageError for names outside known_proxies().
void check_proxy_name(const std::string& name);

struct ScoringConfig {
  std::vector<std::string> proxies{"diswot"};
  WeightSource weight_source = WeightSource::FcWeights;
  GramNormalization normalization = GramNormalization::RowL2;
  double temperature = 1.0;  // kd_kl
  InitScheme init = InitScheme::Kaiming;
  double gaussian_std = 0.01;
};

// Per-purpose seeds drawn from one run seed.
std::uint64_t teacher_seed(std::uint64_t run_seed);
std::uint64_t student_seed(std::uint64_t run_seed);
std::uint64_t batch_seed(std::uint64_t run_seed);

class ProxyEvaluator {
 public:
  ProxyEvaluator(const SearchSpace& space, const ArchDescriptor& teacher, Batch batch,
                 ScoringConfig cfg, std::uint64_t run_seed);

  // One score per configured proxy, in configuration order.
  std::vector<ProxyScore> score(const ArchDescriptor& student) const;

  const ScoringConfig& config() const { return cfg_; }

 private:
  SearchSpace space_;
  Batch batch_;
  ScoringConfig cfg_;
  InitSpec student_init_;
  std::optional<ActivationBundle> teacher_;
};

}  // namespace diswot
