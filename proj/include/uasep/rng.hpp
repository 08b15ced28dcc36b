#ifndef UASEP_RNG_HPP
#define UASEP_RNG_HPP

#include <cstdint>
#include <random>

namespace uasep {

// Seeded generator used everywhere randomness is needed. All draws go through
// one engine type so a (seed, call sequence) pair fully determines the output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double gaussian(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Uniform integer in [lo, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

  // Derives an independent stream for a sub-task without disturbing this one.
  std::uint64_t fork_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uasep

#endif  // UASEP_RNG_HPP
