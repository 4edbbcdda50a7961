#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace normlens {

/// Entropy lower bound of a UnitNorm attention row:
///
///   ELB(k; L, D) = log(L - 1 + e^d) - d e^d / (L - 1 + e^d),  d = 2 D^(k - 1/2)
///
/// Evaluated as log1p(r) + d r / (1 + r) with r = (L - 1) e^-d, which is the
/// same quantity without overflow for large d. Requires L >= 2, D >= 1.
double elb(double k, std::size_t l, std::size_t d_dim);

// ELB as a function of the logit gap d >= 0 directly.
double elb_at_gap(double gap, std::size_t l);

// d = 2 D^(k - 1/2)
double elb_gap(double k, std::size_t d_dim);

// dELB/dk = [d e^d (1 - L) / (L - 1 + e^d)^2] * d ln D. Zero when D == 1.
double elb_dk(double k, std::size_t l, std::size_t d_dim);

struct K50Options {
  double tol = 1e-9;  // on |ELB(k) - log(L)/2|
  double lo = -1.0;   // initial bracket
  double hi = 3.0;
  int max_expansions = 60;
  bool expand_upper_first = false;
};

/// The k at which ELB(k; L, D) = log(L)/2. The bracket is widened by doubling
/// its span outward until it straddles the root, then bisected.
/// Throws std::domain_error for D == 1 (ELB does not depend on k) or when
/// the bracket cannot be established.
double k50(std::size_t l, std::size_t d_dim, const K50Options& opts = {});

enum class SearchMode {
  // Every non-decreasing tuple of grid indices for the L - 1 context
  // coordinates (entropy is symmetric in them).
  Exhaustive,
  // As Exhaustive for the first L - 2 coordinates; the last one only visits
  // the two ends of its admissible range. Along any single logit z_j the
  // entropy has dH/dz_j = -p_j (z_j - zbar), which changes sign at most once
  // (from + to -), so the minimum over an interval is at an endpoint.
  EndpointReduced,
};

struct BruteForceResult {
  double entropy = 0.0;
  std::vector<double> context;  // minimizing c_j for j != anchor, ascending
  std::size_t evaluations = 0;
};

/// Grid-search oracle for the entropy bound: minimizes
/// entropy(softmax(D^(k-1/2) c)) over c in [-1,1]^L with the anchor's
/// self product c_i = 1 and each other c_j on a uniform grid of `grid`
/// points including both ends. Requires 2 <= L <= 6 and grid >= 101;
/// throws std::invalid_argument otherwise.
BruteForceResult elb_bruteforce(double k, std::size_t l, std::size_t d_dim, std::size_t grid,
                                SearchMode mode = SearchMode::Exhaustive);

struct ElbPoint {
  double k = 0.0;
  std::size_t l = 0;
  std::size_t d_dim = 0;
  double d_val = 0.0;
  double elb = 0.0;
};

// `steps` evenly spaced k values from k_min to k_max inclusive.
std::vector<ElbPoint> elb_curve(std::size_t l, std::size_t d_dim, double k_min, double k_max,
                                std::size_t steps);

struct K50Cell {
  std::size_t l = 0;
  std::size_t d_dim = 0;
  double k50 = 0.0;
  double elb_at_k50 = 0.0;
};

// Row-major over (ls x ds).
std::vector<K50Cell> k50_landscape(std::span<const std::size_t> ls, std::span<const std::size_t> ds,
                                   double tol);

}  // namespace normlens
