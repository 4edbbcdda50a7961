#include "normlens/elb.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "normlens/parallel.hpp"

namespace normlens {

namespace {

void check_ld(std::size_t l, std::size_t d_dim) {
  if (l < 2) throw std::invalid_argument("ELB needs L >= 2");
  if (d_dim < 1) throw std::invalid_argument("ELB needs D >= 1");
}

}  // namespace

double elb_gap(double k, std::size_t d_dim) {
  return 2.0 * std::pow(static_cast<double>(d_dim), k - 0.5);
}

double elb_at_gap(double gap, std::size_t l) {
  if (l < 2) throw std::invalid_argument("ELB needs L >= 2");
  const double r = static_cast<double>(l - 1) * std::exp(-gap);
  return std::log1p(r) + gap * r / (1.0 + r);
}

double elb(double k, std::size_t l, std::size_t d_dim) {
  check_ld(l, d_dim);
  if (!std::isfinite(k)) throw std::invalid_argument("ELB needs finite k");
  return elb_at_gap(elb_gap(k, d_dim), l);
}

double elb_dk(double k, std::size_t l, std::size_t d_dim) {
  check_ld(l, d_dim);
  const double d = elb_gap(k, d_dim);
  const double r = static_cast<double>(l - 1) * std::exp(-d);
  // d e^d (1 - L) / (L - 1 + e^d)^2 == -d r / (1 + r)^2
  const double d_elb_d_gap = -d * r / ((1.0 + r) * (1.0 + r));
  return d_elb_d_gap * d * std::log(static_cast<double>(d_dim));
}

double k50(std::size_t l, std::size_t d_dim, const K50Options& opts) {
  check_ld(l, d_dim);
  if (d_dim == 1) throw std::domain_error("k50: no solution for D = 1 (ELB is constant in k)");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("k50: tol must be > 0");
  if (!(opts.lo < opts.hi)) throw std::invalid_argument("k50: need lo < hi");

  const double target = 0.5 * std::log(static_cast<double>(l));
  auto f = [&](double k) { return elb(k, l, d_dim) - target; };

  double lo = opts.lo, hi = opts.hi;
  double flo = f(lo), fhi = f(hi);
  int expansions = 0;
  while (!(flo > 0.0 && fhi < 0.0)) {
    if (expansions++ >= opts.max_expansions) {
      throw std::domain_error("k50: could not bracket the root");
    }
    const double span = hi - lo;
    const bool lower_bad = !(flo > 0.0);
    const bool upper_bad = !(fhi < 0.0);
    if (lower_bad && (!upper_bad || !opts.expand_upper_first)) {
      lo -= span;
      flo = f(lo);
    } else {
      hi += span;
      fhi = f(hi);
    }
  }
  if (std::abs(flo) <= opts.tol) return lo;
  if (std::abs(fhi) <= opts.tol) return hi;

  double best = lo, best_err = std::abs(flo);
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (std::abs(fm) < best_err) {
      best = mid;
      best_err = std::abs(fm);
    }
    if (best_err <= opts.tol) return best;
    (fm > 0.0 ? lo : hi) = mid;
  }
  if (best_err <= opts.tol) return best;
  throw std::domain_error("k50: bisection exhausted before reaching tol (residual " +
                          std::to_string(best_err) + ")");
}

namespace {

double binomial(std::size_t n, std::size_t r) {
  double c = 1.0;
  for (std::size_t i = 1; i <= r; ++i) c = c * static_cast<double>(n - r + i) / static_cast<double>(i);
  return c;
}

constexpr double kMaxEvaluations = 4e9;

class GridSearch {
 public:
  GridSearch(double scale, std::size_t context, std::size_t grid, SearchMode mode)
      : context_(context), grid_(grid), mode_(mode), c_(grid), w_(grid), u_(grid), idx_(context) {
    for (std::size_t g = 0; g < grid; ++g) {
      c_[g] = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(grid - 1);
      if (g == grid - 1) c_[g] = 1.0;
      // Logits shifted by the anchor's self logit `scale`, so every z <= 0.
      const double z = scale * (c_[g] - 1.0);
      w_[g] = std::exp(z);
      u_[g] = w_[g] * z;
    }
  }

  BruteForceResult run() {
    best_.entropy = std::numeric_limits<double>::infinity();
    recurse(0, 0, 1.0, 0.0);
    for (std::size_t j = 0; j < context_; ++j) best_.context.push_back(c_[best_idx_[j]]);
    return best_;
  }

 private:
  void visit(std::size_t depth, std::size_t g, double w, double s) {
    idx_[depth] = g;
    recurse(depth + 1, g, w + w_[g], s + u_[g]);
  }

  void recurse(std::size_t depth, std::size_t start, double w, double s) {
    if (depth == context_) {
      ++best_.evaluations;
      // H = log W - sum(p z) with p = w / W and the anchor at z = 0.
      const double h = std::log(w) - s / w;
      if (h < best_.entropy) {
        best_.entropy = h;
        best_idx_ = idx_;
      }
      return;
    }
    if (mode_ == SearchMode::EndpointReduced && depth + 1 == context_) {
      visit(depth, start, w, s);
      if (grid_ - 1 != start) visit(depth, grid_ - 1, w, s);
      return;
    }
    for (std::size_t g = start; g < grid_; ++g) visit(depth, g, w, s);
  }

  std::size_t context_;
  std::size_t grid_;
  SearchMode mode_;
  std::vector<double> c_, w_, u_;
  std::vector<std::size_t> idx_, best_idx_;
  BruteForceResult best_;
};

}  // namespace

BruteForceResult elb_bruteforce(double k, std::size_t l, std::size_t d_dim, std::size_t grid,
                                SearchMode mode) {
  if (l < 2 || l > 6) throw std::invalid_argument("elb_bruteforce: L must be in [2, 6]");
  if (d_dim < 1) throw std::invalid_argument("elb_bruteforce: D must be >= 1");
  if (grid < 101) throw std::invalid_argument("elb_bruteforce: grid must be >= 101");
  if (!std::isfinite(k)) throw std::invalid_argument("elb_bruteforce: k must be finite");

  const std::size_t context = l - 1;
  const double cost = mode == SearchMode::Exhaustive
                          ? binomial(grid + context - 1, context)
                          : 2.0 * binomial(grid + context - 2, context - 1);
  if (cost > kMaxEvaluations) {
    throw std::invalid_argument("elb_bruteforce: " + std::to_string(cost) +
                                " evaluations exceeds the search budget; reduce grid or L");
  }
  const double scale = std::pow(static_cast<double>(d_dim), k - 0.5);
  return GridSearch(scale, context, grid, mode).run();
}

std::vector<ElbPoint> elb_curve(std::size_t l, std::size_t d_dim, double k_min, double k_max,
                                std::size_t steps) {
  check_ld(l, d_dim);
  if (!(k_min < k_max)) throw std::invalid_argument("elb_curve: need k_min < k_max");
  if (steps < 2) throw std::invalid_argument("elb_curve: need steps >= 2");
  std::vector<ElbPoint> out(steps);
  parallel_for(steps, [&](std::size_t i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    const double k = i + 1 == steps ? k_max : k_min + t * (k_max - k_min);
    out[i] = ElbPoint{k, l, d_dim, elb_gap(k, d_dim), elb(k, l, d_dim)};
  });
  return out;
}

std::vector<K50Cell> k50_landscape(std::span<const std::size_t> ls, std::span<const std::size_t> ds,
                                   double tol) {
  std::vector<K50Cell> out(ls.size() * ds.size());
  K50Options opts;
  opts.tol = tol;
  parallel_for(out.size(), [&](std::size_t c) {
    const std::size_t l = ls[c / ds.size()];
    const std::size_t d = ds[c % ds.size()];
    const double k = k50(l, d, opts);
    out[c] = K50Cell{l, d, k, elb(k, l, d)};
  });
  return out;
}

}  // namespace normlens
