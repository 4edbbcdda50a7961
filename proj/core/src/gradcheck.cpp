#include "normlens/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normlens/norm.hpp"
#include "normlens/parallel.hpp"

namespace normlens {

std::vector<double> Matrix::multiply(std::span<const double> v) const {
  if (v.size() != cols_) throw std::invalid_argument("Matrix::multiply: shape mismatch");
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[r] += (*this)(r, c) * v[c];
  return out;
}

std::vector<double> Matrix::multiply_transposed(std::span<const double> v) const {
  if (v.size() != rows_) throw std::invalid_argument("Matrix::multiply_transposed: shape mismatch");
  std::vector<double> out(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[c] += (*this)(r, c) * v[r];
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::scaled(double a) const {
  Matrix m = *this;
  for (double& x : m.data_) x *= a;
  return m;
}

std::vector<double> AffineLayer::apply(std::span<const double> v) const {
  if (b.size() != w.rows()) throw std::invalid_argument("AffineLayer: bias length != rows of W");
  auto x = w.multiply(v);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += b[i];
  return x;
}

AffineLayer AffineLayer::scaled(double alpha) const {
  AffineLayer out{w.scaled(alpha), b};
  for (double& x : out.b) x *= alpha;
  return out;
}

Matrix unitnorm_jacobian(std::span<const double> x, double k) {
  const double norm = l2_norm(x);
  if (!(norm > 0.0)) throw std::invalid_argument("unitnorm_jacobian: zero vector");
  const std::size_t d = x.size();
  const double s = std::pow(static_cast<double>(d), 0.5 * k);
  const double inv = 1.0 / norm;
  const double inv3 = inv * inv * inv;
  Matrix j(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) j(r, c) = s * ((r == c ? inv : 0.0) - x[r] * x[c] * inv3);
  return j;
}

GradBundle backward_affine_unitnorm(const AffineLayer& layer, std::span<const double> v, double k,
                                    std::span<const double> upstream) {
  if (v.size() != layer.w.cols()) throw std::invalid_argument("backward: v length != cols of W");
  if (upstream.size() != layer.w.rows()) throw std::invalid_argument("backward: upstream length != rows of W");
  const auto x = layer.apply(v);
  if (!(l2_norm(x) > 0.0)) throw std::invalid_argument("backward: W v + b has zero norm");

  const Matrix j = unitnorm_jacobian(x, k);
  GradBundle g;
  g.grad_b = j.multiply_transposed(upstream);
  g.grad_w = Matrix(layer.w.rows(), layer.w.cols());
  for (std::size_t r = 0; r < layer.w.rows(); ++r)
    for (std::size_t c = 0; c < layer.w.cols(); ++c) g.grad_w(r, c) = g.grad_b[r] * v[c];
  g.grad_v = layer.w.multiply_transposed(g.grad_b);
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: length mismatch");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    ref = std::max(ref, std::abs(b[i]));
  }
  return diff / std::max(ref, floor);
}

AlphaScalingResult alpha_scaling_check(const AffineLayer& layer, std::span<const double> v, double k,
                                       double alpha, std::span<const double> upstream) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha_scaling_check: alpha must be > 0");
  const AffineLayer scaled = layer.scaled(alpha);

  const auto y = unit_normalize(layer.apply(v), k);
  const auto y_scaled = unit_normalize(scaled.apply(v), k);
  AlphaScalingResult r;
  for (std::size_t i = 0; i < y.size(); ++i) {
    r.output_max_abs_diff = std::max(r.output_max_abs_diff, std::abs(y[i] - y_scaled[i]));
  }

  const GradBundle base = backward_affine_unitnorm(layer, v, k, upstream);
  const GradBundle moved = backward_affine_unitnorm(scaled, v, k, upstream);
  const Matrix expected_w = base.grad_w.scaled(1.0 / alpha);
  std::vector<double> expected_b = base.grad_b;
  for (double& x : expected_b) x /= alpha;

  r.grad_w_rel_err = relative_error(moved.grad_w.data(), expected_w.data());
  r.grad_b_rel_err = relative_error(moved.grad_b, expected_b);
  r.grad_v_rel_err = relative_error(moved.grad_v, base.grad_v);
  r.output_invariant = r.output_max_abs_diff < kOutputInvarianceTol;
  r.grads_scale_correctly = r.grad_w_rel_err <= kGradScalingRelTol &&
                            r.grad_b_rel_err <= kGradScalingRelTol &&
                            r.grad_v_rel_err <= kGradScalingRelTol;
  return r;
}

namespace {

double step_for(double theta, double rel_step) { return rel_step * std::max(1.0, std::abs(theta)); }

}  // namespace

Matrix finite_difference_jacobian(
    const std::function<std::vector<double>(std::span<const double>)>& f, std::span<const double> at,
    double rel_step) {
  std::vector<double> p(at.begin(), at.end());
  const std::size_t rows = f(p).size();
  Matrix j(rows, at.size());
  for (std::size_t c = 0; c < at.size(); ++c) {
    const double h = step_for(at[c], rel_step);
    p[c] = at[c] + h;
    const auto plus = f(p);
    p[c] = at[c] - h;
    const auto minus = f(p);
    p[c] = at[c];
    for (std::size_t r = 0; r < rows; ++r) j(r, c) = (plus[r] - minus[r]) / (2.0 * h);
  }
  return j;
}

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> at, double rel_step) {
  std::vector<double> p(at.begin(), at.end());
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double h = step_for(at[i], rel_step);
    p[i] = at[i] + h;
    const double plus = f(p);
    p[i] = at[i] - h;
    const double minus = f(p);
    p[i] = at[i];
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

GradBundle finite_difference_bundle(const AffineLayer& layer, std::span<const double> v, double k,
                                    std::span<const double> upstream, double rel_step) {
  auto loss = [&](const AffineLayer& lay, std::span<const double> input) {
    const auto y = unit_normalize(lay.apply(input), k);
    return dot(upstream, y);
  };

  GradBundle g;
  g.grad_w = Matrix(layer.w.rows(), layer.w.cols());
  {
    AffineLayer probe = layer;
    const auto flat = finite_difference_gradient(
        [&](std::span<const double> w) {
          std::copy(w.begin(), w.end(), probe.w.data().begin());
          return loss(probe, v);
        },
        layer.w.data(), rel_step);
    std::copy(flat.begin(), flat.end(), g.grad_w.data().begin());
  }
  {
    AffineLayer probe = layer;
    g.grad_b = finite_difference_gradient(
        [&](std::span<const double> b) {
          std::copy(b.begin(), b.end(), probe.b.begin());
          return loss(probe, v);
        },
        layer.b, rel_step);
  }
  g.grad_v = finite_difference_gradient([&](std::span<const double> in) { return loss(layer, in); }, v,
                                        rel_step);
  return g;
}

bool GradcheckReport::trial_passes(const GradcheckTrial& t) const {
  return t.jacobian_fd_rel_err < thresholds.fd_rel && t.grad_w_fd_rel_err < thresholds.fd_rel &&
         t.grad_b_fd_rel_err < thresholds.fd_rel && t.grad_v_fd_rel_err < thresholds.fd_rel &&
         t.jx_max_abs <= thresholds.null_space && t.j_asymmetry <= thresholds.null_space &&
         t.scaling.output_invariant && t.scaling.grads_scale_correctly;
}

bool GradcheckReport::all_pass() const {
  return std::all_of(trials.begin(), trials.end(), [&](const GradcheckTrial& t) { return trial_passes(t); });
}

GradcheckReport run_gradcheck_trials(std::size_t trials, Seed seed) {
  GradcheckReport report;
  report.seed = seed;
  report.trials.resize(trials);

  parallel_for(trials, [&](std::size_t i) {
    Rng rng = Rng::derive(seed, i);
    GradcheckTrial t;
    t.index = i;
    t.d_in = 2 + rng.below(11);
    t.d_out = 2 + rng.below(11);
    t.k = rng.uniform(0.5, 2.0);
    t.alpha = std::pow(10.0, rng.uniform(-3.0, 3.0));

    AffineLayer layer{Matrix(t.d_out, t.d_in), std::vector<double>(t.d_out)};
    for (double& w : layer.w.data()) w = rng.normal();
    for (double& b : layer.b) b = rng.normal();
    std::vector<double> v(t.d_in), g(t.d_out);
    for (double& a : v) a = rng.normal();
    for (double& a : g) a = rng.normal();

    const auto x = layer.apply(v);
    const Matrix j = unitnorm_jacobian(x, t.k);
    const Matrix j_fd = finite_difference_jacobian(
        [&](std::span<const double> p) { return unit_normalize(p, t.k); }, x);
    t.jacobian_fd_rel_err = relative_error(j_fd.data(), j.data());
    for (double a : j.multiply(x)) t.jx_max_abs = std::max(t.jx_max_abs, std::abs(a));
    const Matrix jt = j.transposed();
    for (std::size_t q = 0; q < j.data().size(); ++q)
      t.j_asymmetry = std::max(t.j_asymmetry, std::abs(j.data()[q] - jt.data()[q]));
    t.upstream_jx = std::abs(dot(g, j.multiply(x)));

    const GradBundle closed = backward_affine_unitnorm(layer, v, t.k, g);
    const GradBundle numeric = finite_difference_bundle(layer, v, t.k, g);
    t.grad_w_fd_rel_err = relative_error(numeric.grad_w.data(), closed.grad_w.data());
    t.grad_b_fd_rel_err = relative_error(numeric.grad_b, closed.grad_b);
    t.grad_v_fd_rel_err = relative_error(numeric.grad_v, closed.grad_v);
    t.scaling = alpha_scaling_check(layer, v, t.k, t.alpha, g);
    report.trials[i] = t;
  });
  return report;
}

}  // namespace normlens
