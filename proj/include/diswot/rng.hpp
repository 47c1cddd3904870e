#pragma once

#include <cstdint>
#include <string_view>

namespace diswot {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
std::uint64_t mix64(std::uint64_t x);

// Combines a seed and a stream identifier into an independent stream key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

// FNV-1a 64-bit, used to turn layer names and labels into stream ids.
std::uint64_t hash_name(std::string_view name);

// Counter-based generator: the i-th output of stream (seed, stream_id) is
// mix64(key + (i + 1) * golden_gamma) with key = derive_seed(seed, stream_id).
// Streams are addressable, so results never depend on the order in which
// different streams are consumed. Normal deviates use Box-Muller.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n), unbiased (rejection). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace diswot
