#include "normlens/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "normlens/parallel.hpp"

namespace normlens {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(Seed seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(~stream)));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  // Lemire's multiply-shift with rejection.
  u128 m = static_cast<u128>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(engine_()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

TokenBatch gaussian_batch(std::size_t n, std::size_t l, std::span<const double> mu,
                          std::span<const double> sigma2, Seed seed) {
  if (mu.size() != sigma2.size()) {
    throw std::invalid_argument("gaussian_batch: mu and sigma2 lengths differ");
  }
  const std::size_t d = mu.size();
  if (n == 0 || l == 0 || d == 0) throw std::invalid_argument("gaussian_batch: zero dimension");
  std::vector<double> sd(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(sigma2[i] >= 0.0) || !std::isfinite(sigma2[i]) || !std::isfinite(mu[i])) {
      throw std::invalid_argument("gaussian_batch: variance must be finite and >= 0");
    }
    sd[i] = std::sqrt(sigma2[i]);
  }

  TokenBatch out(n, l, d);
  parallel_for(n, [&](std::size_t b) {
    Rng rng = Rng::derive(seed, b);
    for (std::size_t t = 0; t < l; ++t) {
      auto tok = out.token(b, t);
      for (std::size_t f = 0; f < d; ++f) tok[f] = mu[f] + sd[f] * rng.normal();
    }
  });
  return out;
}

}  // namespace normlens
