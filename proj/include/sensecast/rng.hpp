#pragma once

#include <cstdint>
#include <random>

namespace sensecast {

// Deterministic random stream. All draws are built from the raw mt19937_64
// output so that results are byte-identical across standard library
// implementations (std:: distributions are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare, keeps the state trivial).
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Poisson draw; Knuth's product method, adequate for the small means
  // used here (events per second, samples per bin).
  std::uint64_t poisson(double mean);

  // Derive an independent child seed for stream `index` (splitmix64 mixing).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::mt19937_64 gen_;
};

}  // namespace sensecast
