#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "normlens/rng.hpp"

namespace normlens {

// Dense row-major real64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  std::vector<double> multiply(std::span<const double> v) const;            // M v
  std::vector<double> multiply_transposed(std::span<const double> v) const;  // M^T v
  Matrix transposed() const;
  Matrix scaled(double a) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// x = W v + b
struct AffineLayer {
  Matrix w;
  std::vector<double> b;

  std::vector<double> apply(std::span<const double> v) const;
  AffineLayer scaled(double alpha) const;  // (alpha W, alpha b)
};

// Gradients of a scalar loss through UnitNorm(W v + b).
struct GradBundle {
  Matrix grad_w;
  std::vector<double> grad_b;
  std::vector<double> grad_v;
};

// J = D^(k/2) (I / ||x|| - x x^T / ||x||^3). Throws std::invalid_argument on x = 0.
Matrix unitnorm_jacobian(std::span<const double> x, double k);

// grad_b = J^T g, grad_w = (J^T g) v^T, grad_v = W^T J^T g, with g the
// upstream gradient dL/dx~.
GradBundle backward_affine_unitnorm(const AffineLayer& layer, std::span<const double> v, double k,
                                    std::span<const double> upstream);

struct AlphaScalingResult {
  bool output_invariant = false;
  bool grads_scale_correctly = false;
  double output_max_abs_diff = 0.0;
  double grad_w_rel_err = 0.0;  // grad_w(aW, ab) vs grad_w(W, b) / a
  double grad_b_rel_err = 0.0;
  double grad_v_rel_err = 0.0;  // grad_v(aW, ab) vs grad_v(W, b)
};

inline constexpr double kOutputInvarianceTol = 1e-12;
inline constexpr double kGradScalingRelTol = 1e-10;

AlphaScalingResult alpha_scaling_check(const AffineLayer& layer, std::span<const double> v, double k,
                                       double alpha, std::span<const double> upstream);

// ||a - b||_inf / max(||b||_inf, floor)
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-300);

/// Central-difference derivatives, step h = rel_step * max(1, |theta|).
Matrix finite_difference_jacobian(
    const std::function<std::vector<double>(std::span<const double>)>& f, std::span<const double> at,
    double rel_step = 1e-6);
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> at,
    double rel_step = 1e-6);

// Same bundle as backward_affine_unitnorm, from central differences of
// L = upstream^T UnitNorm(W v + b).
GradBundle finite_difference_bundle(const AffineLayer& layer, std::span<const double> v, double k,
                                    std::span<const double> upstream, double rel_step = 1e-6);

struct GradcheckTrial {
  std::size_t index = 0;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  double k = 0.0;
  double alpha = 0.0;
  double jacobian_fd_rel_err = 0.0;
  double jx_max_abs = 0.0;      // ||J x||_inf
  double j_asymmetry = 0.0;     // ||J - J^T||_inf
  double grad_w_fd_rel_err = 0.0;
  double grad_b_fd_rel_err = 0.0;
  double grad_v_fd_rel_err = 0.0;
  double upstream_jx = 0.0;     // |g^T J x|
  AlphaScalingResult scaling;
};

struct GradcheckThresholds {
  double fd_rel = 1e-6;
  double null_space = 1e-12;  // ||J x||_inf and J symmetry
};

struct GradcheckReport {
  std::vector<GradcheckTrial> trials;
  GradcheckThresholds thresholds;
  Seed seed = 0;

  bool trial_passes(const GradcheckTrial& t) const;
  bool all_pass() const;
};

/// Random instances: D_in, D_out in [2, 12], W, b, v, g ~ N(0, 1),
/// k ~ U[0.5, 2], alpha log-uniform in [1e-3, 1e3]. Trial i uses stream
/// derive(seed, i).
GradcheckReport run_gradcheck_trials(std::size_t trials, Seed seed);

}  // namespace normlens
