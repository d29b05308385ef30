#pragma once

#include <cstdint>
#include <random>

namespace nmsp {

// Seeded generator threaded explicitly through every stochastic operation.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Uniform and normal draws are derived here rather than through
// <random> distributions, which are implementation-defined, so a seed gives
// the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream; the parent advances by one draw.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nmsp
