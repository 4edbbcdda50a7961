#include "normlens/signflip.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normlens/parallel.hpp"

namespace normlens {

void GaussianTokenModel::validate() const {
  const std::size_t d = mu_x.size();
  if (d == 0) throw std::invalid_argument("GaussianTokenModel: D must be positive");
  if (sigma2_x.size() != d || mu_y.size() != d || sigma2_y.size() != d) {
    throw std::invalid_argument("GaussianTokenModel: vector lengths differ");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(sigma2_x[i] >= 0.0) || !(sigma2_y[i] >= 0.0)) {
      throw std::invalid_argument("GaussianTokenModel: variances must be >= 0");
    }
  }
}

GaussianTokenModel GaussianTokenModel::shared(std::size_t d, double mu_x, double sigma2_x,
                                              double mu_y, double sigma2_y) {
  GaussianTokenModel m{std::vector<double>(d, mu_x), std::vector<double>(d, sigma2_x),
                       std::vector<double>(d, mu_y), std::vector<double>(d, sigma2_y)};
  m.validate();
  return m;
}

double dot_mean(const GaussianTokenModel& m) {
  m.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) s += m.mu_x[i] * m.mu_y[i];
  return s;
}

double dot_variance(const GaussianTokenModel& m) {
  m.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    s += m.sigma2_x[i] * m.sigma2_y[i] + m.sigma2_y[i] * m.mu_x[i] * m.mu_x[i] +
         m.sigma2_x[i] * m.mu_y[i] * m.mu_y[i];
  }
  return s;
}

ConditionTerms theorem_condition_terms(const GaussianTokenModel& m) {
  m.validate();
  double mu_dot = 0.0, var_var = 0.0, vy_mx2 = 0.0, vx_my2 = 0.0;
  double inf_sxsy = 0.0, inf_sy_mx = 0.0, inf_sx_my = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double sx = std::sqrt(m.sigma2_x[i]);
    const double sy = std::sqrt(m.sigma2_y[i]);
    mu_dot += m.mu_x[i] * m.mu_y[i];
    var_var += m.sigma2_x[i] * m.sigma2_y[i];
    vy_mx2 += m.sigma2_y[i] * m.mu_x[i] * m.mu_x[i];
    vx_my2 += m.sigma2_x[i] * m.mu_y[i] * m.mu_y[i];
    inf_sxsy = std::max(inf_sxsy, sx * sy);
    inf_sy_mx = std::max(inf_sy_mx, sy * std::abs(m.mu_x[i]));
    inf_sx_my = std::max(inf_sx_my, sx * std::abs(m.mu_y[i]));
  }
  ConditionTerms t;
  t.lhs = std::abs(mu_dot);
  t.rhs = 12.0 * (std::sqrt(var_var) + inf_sxsy) +
          5.0 * (std::sqrt(vy_mx2) + std::sqrt(vx_my2) + inf_sy_mx + inf_sx_my);
  return t;
}

double corollary_ratio_threshold(std::size_t d) {
  if (d == 0) throw std::invalid_argument("corollary: D must be >= 1");
  return 6.0 / std::pow(static_cast<double>(d), 0.25);
}

bool corollary_condition(double mu_x, double sigma_x, double mu_y, double sigma_y, std::size_t d) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
    throw std::invalid_argument("corollary_condition: sigma must be > 0");
  }
  const double threshold = corollary_ratio_threshold(d);
  return d >= kCorollaryMinDim && mu_x / sigma_x >= threshold && mu_y / sigma_y >= threshold;
}

bool corollary_implies_theorem_check(std::size_t d, double ratio) {
  if (d == 0 || !(ratio > 0.0)) throw std::invalid_argument("corollary check: need d >= 1, ratio > 0");
  if (!corollary_condition(ratio, 1.0, ratio, 1.0, d)) return true;
  return theorem_condition(GaussianTokenModel::shared(d, ratio, 1.0, ratio, 1.0));
}

SignFlipEstimate proportion(std::size_t hits, std::size_t n, Seed seed) {
  if (n == 0) throw std::invalid_argument("proportion: n must be >= 1");
  SignFlipEstimate e;
  e.n_samples = n;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n));
  e.seed = seed;
  return e;
}

namespace {

constexpr std::size_t kChunk = 4096;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void standardize_empirical(std::vector<double>& v) {
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  var /= static_cast<double>(v.size());
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& a : v) a = (a - mean) * inv;
}

}  // namespace

SignFlipCounts count_signflip_events(const GaussianTokenModel& m, std::size_t n_samples, Seed seed,
                                     Standardization mode) {
  m.validate();
  if (n_samples == 0) throw std::invalid_argument("estimate_signflip: n_samples must be >= 1");
  const std::size_t d = m.dim();
  std::vector<double> sx(d), sy(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(m.sigma2_x[i] > 0.0) || !(m.sigma2_y[i] > 0.0)) {
      throw std::invalid_argument("estimate_signflip: every variance must be > 0");
    }
    sx[i] = std::sqrt(m.sigma2_x[i]);
    sy[i] = std::sqrt(m.sigma2_y[i]);
  }

  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<SignFlipCounts> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = Rng::derive(seed, c);
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_samples, begin + kChunk);
    std::vector<double> x(d), y(d), xs(d), ys(d);
    SignFlipCounts& out = partial[c];
    for (std::size_t s = begin; s < end; ++s) {
      for (std::size_t i = 0; i < d; ++i) xs[i] = rng.normal();
      for (std::size_t i = 0; i < d; ++i) ys[i] = rng.normal();
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = m.mu_x[i] + sx[i] * xs[i];
        y[i] = m.mu_y[i] + sy[i] * ys[i];
      }
      if (mode == Standardization::EmpiricalPerToken) {
        xs = x;
        ys = y;
        standardize_empirical(xs);
        standardize_empirical(ys);
      } else {
        // (x - mu)/sigma recomputed from x so the rounding matches the formula.
        for (std::size_t i = 0; i < d; ++i) {
          xs[i] = (x[i] - m.mu_x[i]) / sx[i];
          ys[i] = (y[i] - m.mu_y[i]) / sy[i];
        }
      }
      const double raw = dot(x, y);
      const double normed = dot(xs, ys);
      ++out.samples;
      const int a = sign_of(raw), b = sign_of(normed);
      if (a != 0 && b != 0 && a != b) ++out.flips;
      if (raw <= 0.0) ++out.raw_nonpositive;
      if (normed > 0.0) ++out.normalized_positive;
    }
  });

  SignFlipCounts total;
  for (const auto& p : partial) {
    total.samples += p.samples;
    total.flips += p.flips;
    total.raw_nonpositive += p.raw_nonpositive;
    total.normalized_positive += p.normalized_positive;
  }
  return total;
}

SignFlipEstimate estimate_signflip(const GaussianTokenModel& m, std::size_t n_samples, Seed seed,
                                   Standardization mode) {
  const SignFlipCounts c = count_signflip_events(m, n_samples, seed, mode);
  return proportion(c.flips, c.samples, seed);
}

}  // namespace normlens
