#pragma once

#include <cstdint>
#include <random>

#include "dytb/numeric.hpp"

namespace dytb {

// Independent per-instance seed: SplitMix64 applied to (base, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Deterministic stream. Bounded draws use plain modulo so results do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [lo, hi].
  long uniform_int(long lo, long hi);
  bool bernoulli(double p);
  // a / 2^k with a in [-range, range] and k in [0, max_shift].
  Rational dyadic(long range, int max_shift);
  Rational nonzero_dyadic(long range, int max_shift);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dytb
