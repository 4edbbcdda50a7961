#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "normlens/norm.hpp"
#include "normlens/tensor.hpp"

namespace normlens {

inline constexpr std::size_t kHistogramBins = 100;

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;  // uniform bins over [lo, hi]; hi falls in the last bin
};

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double min = 0.0;
  double max = 0.0;
  Histogram histogram;
};

// Quantile of sorted data at position q * (n - 1); between two order
// statistics the midpoint of the neighbours is returned.
double midpoint_quantile(std::span<const double> sorted, double q);

// Infinite values are excluded from mean/quantiles and counted nowhere.
Summary summarize(std::span<const double> values, double lo, double hi,
                  std::size_t bins = kHistogramBins);

/// Per-anchor attention-shift metrics between A = attn(x) and
/// A~ = attn(normalize(x, cfg)), plus summaries. Vectors are indexed by
/// n * L + i.
struct MetricReport {
  std::size_t n = 0;
  std::size_t l = 0;
  std::size_t d = 0;
  NormConfig config;
  std::vector<double> chebyshev;
  std::vector<double> cosine;
  std::vector<double> kl;
  std::vector<double> entropy_original;
  std::vector<double> entropy_normalized;
  std::size_t kl_infinite = 0;

  Summary chebyshev_summary;
  Summary cosine_summary;
  Summary kl_summary;
  Summary entropy_original_summary;
  Summary entropy_normalized_summary;

  // Range checks on every metric (chebyshev in [0,1], cosine in [-1,1],
  // kl >= 0, entropies in [0, log L]); returns a description of the first
  // violation or an empty string.
  std::string check_invariants(double tol = 1e-9) const;
};

MetricReport shift_report(const TokenBatch& x, const NormConfig& cfg);

nlohmann::ordered_json to_json(const Summary& s);
nlohmann::ordered_json to_json(const NormConfig& cfg);
// Full report; per-anchor rows are included when `with_rows` is set.
nlohmann::ordered_json to_json(const MetricReport& r, bool with_rows = true);

// Header line, then one row per (n, i):
// n,i,chebyshev,cosine,kl,entropy_orig,entropy_norm
std::string to_csv(const MetricReport& r);

}  // namespace normlens
