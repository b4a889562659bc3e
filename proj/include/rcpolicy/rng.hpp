#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace rcpolicy {

// Mixes a master seed with a stream index (splitmix64 finalizer). Used to give
// every fold, replicate, and worker an independent, schedule-free stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/**
 * Seeded generator with platform-independent draws.
 *
 * std::mt19937_64 output is fixed by the standard, but the std::*_distribution
 * adaptors are not, so all draws are built directly on the raw 64-bit stream.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n), unbiased (rejection sampling).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace rcpolicy
