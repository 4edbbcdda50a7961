#include "normlens/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "normlens/ingest.hpp"
#include "normlens/numfmt.hpp"

namespace normlens {

BatchSource gaussian_source(std::size_t n, std::size_t l, std::vector<double> mu,
                            std::vector<double> sigma2) {
  if (mu.size() != sigma2.size()) throw std::invalid_argument("gaussian_source: mu/sigma2 length mismatch");
  return [n, l, mu = std::move(mu), sigma2 = std::move(sigma2)](std::size_t, Seed s) {
    return gaussian_batch(n, l, mu, sigma2, s);
  };
}

BatchSource pool_source(TokenBatch pool, std::size_t n, std::size_t l) {
  if (l > pool.n() * pool.l()) {
    throw std::invalid_argument("pool_source: L exceeds the number of pooled tokens");
  }
  return [n, l, pool = std::move(pool)](std::size_t, Seed s) { return sample_sequences(pool, n, l, s); };
}

std::string method_label(const NormConfig& cfg) {
  std::string label(to_string(cfg.method));
  if (cfg.method == NormMethod::UnitNorm) label += "(k=" + format_double(cfg.k) + ")";
  return label;
}

namespace {

std::vector<double> pooled(const std::vector<MetricReport>& sets, std::vector<double> MetricReport::*field) {
  std::vector<double> out;
  for (const auto& r : sets) out.insert(out.end(), (r.*field).begin(), (r.*field).end());
  return out;
}

std::vector<std::string> order_by(const std::vector<MethodResult>& methods, bool ascending,
                                  double (*key)(const MethodResult&)) {
  std::vector<std::size_t> idx(methods.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return ascending ? key(methods[a]) < key(methods[b]) : key(methods[a]) > key(methods[b]);
  });
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(method_label(methods[i].config));
  return out;
}

}  // namespace

std::vector<std::string> ShiftStudy::chebyshev_order() const {
  return order_by(methods, true, [](const MethodResult& m) { return m.chebyshev.median; });
}

std::vector<std::string> ShiftStudy::entropy_order() const {
  return order_by(methods, false, [](const MethodResult& m) { return m.entropy_normalized.median; });
}

std::string ShiftStudy::check_invariants(double tol) const {
  for (const auto& m : methods) {
    for (std::size_t s = 0; s < m.sets.size(); ++s) {
      auto err = m.sets[s].check_invariants(tol);
      if (!err.empty()) return method_label(m.config) + " set " + std::to_string(s) + ": " + err;
    }
  }
  return {};
}

ShiftStudy run_shift_study(const BatchSource& source, const std::vector<NormConfig>& methods,
                           std::size_t sets, Seed seed) {
  if (methods.empty()) throw std::invalid_argument("shift study: no methods");
  if (sets == 0) throw std::invalid_argument("shift study: sets must be >= 1");

  ShiftStudy study;
  study.seed = seed;
  for (std::size_t s = 0; s < sets; ++s) study.set_seeds.push_back(Rng::derive(seed, s).next_u64());
  study.methods.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) study.methods[m].config = methods[m];

  for (std::size_t s = 0; s < sets; ++s) {
    const TokenBatch x = source(s, study.set_seeds[s]);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      validate(methods[m], x.d());
      study.methods[m].sets.push_back(shift_report(x, methods[m]));
    }
  }

  for (auto& m : study.methods) {
    const auto& first = m.sets.front();
    const double log_l = std::log(static_cast<double>(first.l));
    const double ent_hi = log_l > 0.0 ? log_l : 1.0;
    const auto kl = pooled(m.sets, &MetricReport::kl);
    double kl_max = 0.0;
    for (double v : kl)
      if (std::isfinite(v)) kl_max = std::max(kl_max, v);
    for (const auto& r : m.sets) m.kl_infinite += r.kl_infinite;

    m.chebyshev = summarize(pooled(m.sets, &MetricReport::chebyshev), 0.0, 1.0);
    m.cosine = summarize(pooled(m.sets, &MetricReport::cosine), 0.0, 1.0);
    m.kl = summarize(kl, 0.0, kl_max > 0.0 ? kl_max : 1.0);
    m.entropy_original = summarize(pooled(m.sets, &MetricReport::entropy_original), 0.0, ent_hi);
    m.entropy_normalized = summarize(pooled(m.sets, &MetricReport::entropy_normalized), 0.0, ent_hi);
  }
  return study;
}

nlohmann::ordered_json to_json(const ShiftStudy& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["set_seeds"] = s.set_seeds;
  const auto& first = s.methods.front().sets.front();
  j["shape"] = {{"N", first.n}, {"L", first.l}, {"D", first.d}};
  j["sets"] = s.set_seeds.size();
  j["quantile_method"] = "midpoint";
  j["kl_direction"] = "D(original || normalized)";

  auto methods = nlohmann::ordered_json::array();
  for (const auto& m : s.methods) {
    nlohmann::ordered_json e;
    e["label"] = method_label(m.config);
    e["normalization"] = to_json(m.config);
    e["kl_infinite"] = m.kl_infinite;
    e["pooled"] = {{"chebyshev", to_json(m.chebyshev)},
                   {"cosine", to_json(m.cosine)},
                   {"kl", to_json(m.kl)},
                   {"entropy_original", to_json(m.entropy_original)},
                   {"entropy_normalized", to_json(m.entropy_normalized)}};
    auto per_set = nlohmann::ordered_json::array();
    for (const auto& r : m.sets) {
      per_set.push_back({{"median_chebyshev", r.chebyshev_summary.median},
                         {"median_cosine", r.cosine_summary.median},
                         {"median_kl", r.kl_summary.median},
                         {"median_entropy_normalized", r.entropy_normalized_summary.median}});
    }
    e["per_set"] = std::move(per_set);
    methods.push_back(std::move(e));
  }
  j["methods"] = std::move(methods);
  j["ordering"] = {{"median_chebyshev_ascending", s.chebyshev_order()},
                   {"median_entropy_normalized_descending", s.entropy_order()}};
  return j;
}

}  // namespace normlens
