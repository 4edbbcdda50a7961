#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "normlens/tensor.hpp"

namespace normlens {

using Seed = std::uint64_t;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seeded random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits. Normals use the Marsaglia polar
/// method and cache the second variate of each accepted pair. The same seed
/// and the same sequence of calls give bit-identical values on any
/// conforming implementation with IEEE-754 doubles and a correctly rounded
/// std::log/std::sqrt.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  // Stream `stream` of the family rooted at `seed`.
  static Rng derive(Seed seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// N x L x D batch with token feature d ~ Normal(mu[d], sigma2[d]).
// Batch element n is drawn from stream derive(seed, n), so the result does
// not depend on the worker count.
TokenBatch gaussian_batch(std::size_t n, std::size_t l, std::span<const double> mu,
                          std::span<const double> sigma2, Seed seed);

}  // namespace normlens
