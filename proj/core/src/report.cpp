#include "normlens/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "normlens/attention.hpp"
#include "normlens/numfmt.hpp"
#include "normlens/parallel.hpp"

namespace normlens {

double midpoint_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return lo == hi ? sorted[lo] : 0.5 * (sorted[lo] + sorted[hi]);
}

Summary summarize(std::span<const double> values, double lo, double hi, std::size_t bins) {
  Summary s;
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  std::sort(finite.begin(), finite.end());

  s.count = finite.size();
  s.histogram.lo = lo;
  s.histogram.hi = hi;
  s.histogram.counts.assign(bins, 0);
  if (finite.empty()) return s;

  double total = 0.0;
  for (double v : finite) total += v;
  s.mean = total / static_cast<double>(finite.size());
  s.median = midpoint_quantile(finite, 0.5);
  s.q05 = midpoint_quantile(finite, 0.05);
  s.q95 = midpoint_quantile(finite, 0.95);
  s.min = finite.front();
  s.max = finite.back();

  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  for (double v : finite) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++s.histogram.counts[static_cast<std::size_t>(b)];
  }
  return s;
}

MetricReport shift_report(const TokenBatch& x, const NormConfig& cfg) {
  const TokenBatch normalized = normalize(x, cfg);
  const AttentionScores original = attention_scores(x);
  const AttentionScores shifted = attention_scores(normalized);

  MetricReport r;
  r.n = x.n();
  r.l = x.l();
  r.d = x.d();
  r.config = cfg;
  const std::size_t rows = x.n() * x.l();
  r.chebyshev.resize(rows);
  r.cosine.resize(rows);
  r.kl.resize(rows);
  r.entropy_original.resize(rows);
  r.entropy_normalized.resize(rows);

  parallel_for(x.n(), [&](std::size_t n) {
    for (std::size_t i = 0; i < x.l(); ++i) {
      const std::size_t k = n * x.l() + i;
      const auto a = original.row(n, i);
      const auto b = shifted.row(n, i);
      r.chebyshev[k] = chebyshev(a, b);
      r.cosine[k] = cosine_similarity(a, b);
      r.kl[k] = kl_divergence(a, b);
      r.entropy_original[k] = entropy(a);
      r.entropy_normalized[k] = entropy(b);
    }
  });

  r.kl_infinite = static_cast<std::size_t>(
      std::count_if(r.kl.begin(), r.kl.end(), [](double v) { return std::isinf(v); }));
  double kl_max = 0.0;
  for (double v : r.kl)
    if (std::isfinite(v)) kl_max = std::max(kl_max, v);

  const double log_l = std::log(static_cast<double>(x.l()));
  r.chebyshev_summary = summarize(r.chebyshev, 0.0, 1.0);
  r.cosine_summary = summarize(r.cosine, 0.0, 1.0);
  r.kl_summary = summarize(r.kl, 0.0, kl_max > 0.0 ? kl_max : 1.0);
  r.entropy_original_summary = summarize(r.entropy_original, 0.0, log_l > 0.0 ? log_l : 1.0);
  r.entropy_normalized_summary = summarize(r.entropy_normalized, 0.0, log_l > 0.0 ? log_l : 1.0);
  return r;
}

std::string MetricReport::check_invariants(double tol) const {
  const double log_l = std::log(static_cast<double>(l));
  auto fail = [](const char* what, std::size_t k, double v) {
    std::ostringstream os;
    os << what << " out of range at row " << k << ": " << format_double(v);
    return os.str();
  };
  for (std::size_t k = 0; k < chebyshev.size(); ++k) {
    if (!(chebyshev[k] >= -tol && chebyshev[k] <= 1.0 + tol)) return fail("chebyshev", k, chebyshev[k]);
    if (!(cosine[k] >= -1.0 - tol && cosine[k] <= 1.0 + tol)) return fail("cosine", k, cosine[k]);
    if (!(kl[k] >= -tol)) return fail("kl", k, kl[k]);
    if (!(entropy_original[k] >= -tol && entropy_original[k] <= log_l + tol))
      return fail("entropy_original", k, entropy_original[k]);
    if (!(entropy_normalized[k] >= -tol && entropy_normalized[k] <= log_l + tol))
      return fail("entropy_normalized", k, entropy_normalized[k]);
  }
  return {};
}

namespace {

// JSON has no infinity; the sentinel is a string.
nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["q05"] = s.q05;
  j["q95"] = s.q95;
  j["min"] = s.min;
  j["max"] = s.max;
  j["histogram"] = {{"lo", s.histogram.lo}, {"hi", s.histogram.hi}, {"counts", s.histogram.counts}};
  return j;
}

nlohmann::ordered_json to_json(const NormConfig& cfg) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(cfg.method));
  j["eps"] = cfg.eps;
  if (cfg.method == NormMethod::UnitNorm) j["k"] = cfg.k;
  j["affine"] = cfg.affine.has_value();
  j["zero_norm"] = cfg.zero_norm == ZeroNormPolicy::Strict ? "strict" : "guard";
  return j;
}

nlohmann::ordered_json to_json(const MetricReport& r, bool with_rows) {
  nlohmann::ordered_json j;
  j["shape"] = {{"N", r.n}, {"L", r.l}, {"D", r.d}};
  j["normalization"] = to_json(r.config);
  j["metric_direction"] = {{"chebyshev", "lower_is_better"},
                           {"cosine", "higher_is_better"},
                           {"kl", "lower_is_better"},
                           {"entropy_normalized", "higher_is_better"}};
  j["kl_direction"] = "D(original || normalized)";
  j["quantile_method"] = "midpoint";
  j["kl_infinite"] = r.kl_infinite;
  j["summary"] = {{"chebyshev", to_json(r.chebyshev_summary)},
                  {"cosine", to_json(r.cosine_summary)},
                  {"kl", to_json(r.kl_summary)},
                  {"entropy_original", to_json(r.entropy_original_summary)},
                  {"entropy_normalized", to_json(r.entropy_normalized_summary)}};
  if (with_rows) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.chebyshev.size(); ++k) {
      rows.push_back({{"n", k / r.l},
                      {"i", k % r.l},
                      {"chebyshev", r.chebyshev[k]},
                      {"cosine", r.cosine[k]},
                      {"kl", number(r.kl[k])},
                      {"entropy_orig", r.entropy_original[k]},
                      {"entropy_norm", r.entropy_normalized[k]}});
    }
    j["rows"] = std::move(rows);
  }
  return j;
}

std::string to_csv(const MetricReport& r) {
  std::string out = "n,i,chebyshev,cosine,kl,entropy_orig,entropy_norm\n";
  for (std::size_t k = 0; k < r.chebyshev.size(); ++k) {
    out += std::to_string(k / r.l);
    out += ',';
    out += std::to_string(k % r.l);
    for (double v : {r.chebyshev[k], r.cosine[k], r.kl[k], r.entropy_original[k], r.entropy_normalized[k]}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace normlens
