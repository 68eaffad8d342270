#pragma once

#include <cstdint>
#include <random>

namespace misinfo {

// Seeded generator with distributions written out explicitly so that draws
// are identical across standard library implementations (the std::
// distributions are implementation-defined). Golden outputs depend on this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double rate);
  double normal();
  std::uint64_t poisson(double mean);

  // Independent child stream; used so that adding draws in one generation
  // phase does not shift another phase.
  Rng split(std::uint64_t stream) { return Rng(engine_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1))); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace misinfo
