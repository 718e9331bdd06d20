#include "dytb/rng.hpp"

#include <stdexcept>

namespace dytb {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

long Rng::uniform_int(long lo, long hi) {
  if (hi < lo) throw std::invalid_argument("empty integer range");
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long>(next() % span);
}

bool Rng::bernoulli(double p) {
  double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return u < p;
}

Rational Rng::dyadic(long range, int max_shift) {
  long a = uniform_int(-range, range);
  long k = uniform_int(0, max_shift);
  return Rational(a) * two_pow(-k);
}

Rational Rng::nonzero_dyadic(long range, int max_shift) {
  for (;;) {
    Rational r = dyadic(range, max_shift);
    if (r != 0) return r;
  }
}

}  // namespace dytb
