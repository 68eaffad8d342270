#include "misinfo/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace misinfo {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::exponential(double rate) { return -std::log(uniform_open0()) / rate; }

double Rng::normal() {
  // Box-Muller, one variate per call.
  const double u1 = uniform_open0();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  // Knuth's product method on chunks of at most 30; sums of independent
  // Poisson variates are Poisson.
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double chunk = std::min(mean, 30.0);
    mean -= chunk;
    const double threshold = std::exp(-chunk);
    double product = uniform();
    while (product > threshold) {
      ++total;
      product *= uniform();
    }
  }
  return total;
}

}  // namespace misinfo
