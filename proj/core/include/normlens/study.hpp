#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "normlens/norm.hpp"
#include "normlens/report.hpp"
#include "normlens/rng.hpp"

namespace normlens {

// Produces the token batch of independent set `set` from its seed.
using BatchSource = std::function<TokenBatch(std::size_t set, Seed set_seed)>;

// i.i.d. Gaussian tokens, feature d ~ N(mu[d], sigma2[d]).
BatchSource gaussian_source(std::size_t n, std::size_t l, std::vector<double> mu,
                            std::vector<double> sigma2);
// Sequences sampled without replacement from an embedding pool.
BatchSource pool_source(TokenBatch pool, std::size_t n, std::size_t l);

struct MethodResult {
  NormConfig config;
  std::vector<MetricReport> sets;
  // Every anchor of every set pooled together.
  Summary chebyshev;
  Summary cosine;
  Summary kl;
  Summary entropy_original;
  Summary entropy_normalized;
  std::size_t kl_infinite = 0;
};

struct ShiftStudy {
  Seed seed = 0;
  std::vector<Seed> set_seeds;
  std::vector<MethodResult> methods;

  // Method labels sorted by pooled median chebyshev (ascending) and by
  // pooled median normalized entropy (descending); ties keep input order.
  std::vector<std::string> chebyshev_order() const;
  std::vector<std::string> entropy_order() const;
  // First range violation over all reports, or empty.
  std::string check_invariants(double tol = 1e-9) const;
};

// "UnitNorm(k=1.5)" for UnitNorm, the method name otherwise.
std::string method_label(const NormConfig& cfg);

// Set s is drawn with seed Rng::derive(seed, s).next_u64(); every method sees
// the same batches.
ShiftStudy run_shift_study(const BatchSource& source, const std::vector<NormConfig>& methods,
                           std::size_t sets, Seed seed);

nlohmann::ordered_json to_json(const ShiftStudy& s);

}  // namespace normlens
