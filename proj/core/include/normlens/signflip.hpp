#pragma once

#include <cstddef>
#include <vector>

#include "normlens/rng.hpp"

namespace normlens {

/// Two independent diagonal Gaussians x ~ N(mu_x, diag(sigma2_x)),
/// y ~ N(mu_y, diag(sigma2_y)) in R^D.
struct GaussianTokenModel {
  std::vector<double> mu_x;
  std::vector<double> sigma2_x;
  std::vector<double> mu_y;
  std::vector<double> sigma2_y;

  std::size_t dim() const { return mu_x.size(); }
  // Throws std::invalid_argument on length mismatch, D = 0 or a negative variance.
  void validate() const;

  // Every coordinate shares the same mean and variance.
  static GaussianTokenModel shared(std::size_t d, double mu_x, double sigma2_x, double mu_y,
                                   double sigma2_y);
};

// E[x^T y] = mu_x^T mu_y.
double dot_mean(const GaussianTokenModel& m);

// Var(x^T y) = sigma2_x^T sigma2_y + sigma2_y^T mu_x^2 + sigma2_x^T mu_y^2.
double dot_variance(const GaussianTokenModel& m);

/// Both sides of the mean-variance condition that forces a high sign-flip
/// probability:
///
///   |mu_x^T mu_y| >= 12 (sqrt(sigma2_x^T sigma2_y) + ||sigma_x o sigma_y||_inf)
///                  + 5 (sqrt(sigma2_y^T mu_x^2) + sqrt(sigma2_x^T mu_y^2)
///                       + ||sigma_y o |mu_x| ||_inf + ||sigma_x o |mu_y| ||_inf)
struct ConditionTerms {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs >= rhs; }
};

ConditionTerms theorem_condition_terms(const GaussianTokenModel& m);
inline bool theorem_condition(const GaussianTokenModel& m) { return theorem_condition_terms(m).holds(); }

// Smallest D for which the shared-statistics corollary applies.
inline constexpr std::size_t kCorollaryMinDim = 77;

// 6 / D^(1/4)
double corollary_ratio_threshold(std::size_t d);

// mu_x/sigma_x >= 6/D^(1/4) and mu_y/sigma_y >= 6/D^(1/4) and D >= 77.
// Throws std::invalid_argument for sigma <= 0 or d == 0.
bool corollary_condition(double mu_x, double sigma_x, double mu_y, double sigma_y, std::size_t d);

// Builds the shared model mu = ratio, sigma = 1 in dimension d and returns
// (corollary_condition => theorem_condition) for that instance.
bool corollary_implies_theorem_check(std::size_t d, double ratio);

// How the estimator standardizes sampled tokens.
enum class Standardization {
  ModelParameters,    // (x - mu_x) / sigma_x with the true model parameters
  EmpiricalPerToken,  // per-token mean/std over features (LayerNorm style, eps = 0)
};

struct SignFlipCounts {
  std::size_t samples = 0;
  std::size_t flips = 0;                // sign(x^T y) != sign(x~^T y~), zeros never flip
  std::size_t raw_nonpositive = 0;      // x^T y <= 0
  std::size_t normalized_positive = 0;  // x~^T y~ > 0
};

struct SignFlipEstimate {
  double p_hat = 0.0;
  std::size_t n_samples = 0;
  double std_err = 0.0;  // sqrt(p_hat (1 - p_hat) / n_samples)
  Seed seed = 0;
};

SignFlipEstimate proportion(std::size_t hits, std::size_t n, Seed seed);

inline constexpr std::size_t kDefaultSignFlipSamples = 100000;

// Samples are drawn in fixed-size chunks, each from its own derived stream,
// so the counts do not depend on the worker count.
SignFlipCounts count_signflip_events(const GaussianTokenModel& m, std::size_t n_samples, Seed seed,
                                     Standardization mode = Standardization::ModelParameters);

SignFlipEstimate estimate_signflip(const GaussianTokenModel& m, std::size_t n_samples, Seed seed,
                                   Standardization mode = Standardization::ModelParameters);

}  // namespace normlens
