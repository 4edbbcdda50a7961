#include "normlens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace normlens {

namespace {

void check_dims(std::size_t n, std::size_t l, std::size_t d) {
  if (n == 0 || l == 0 || d == 0) {
    throw std::invalid_argument("TokenBatch dimensions must be positive, got (" + std::to_string(n) +
                                ", " + std::to_string(l) + ", " + std::to_string(d) + ")");
  }
}

}  // namespace

TokenBatch::TokenBatch(std::size_t n, std::size_t l, std::size_t d) : n_(n), l_(l), d_(d) {
  check_dims(n, l, d);
  data_.assign(n * l * d, 0.0);
}

TokenBatch::TokenBatch(std::size_t n, std::size_t l, std::size_t d, std::vector<double> data)
    : n_(n), l_(l), d_(d), data_(std::move(data)) {
  check_dims(n, l, d);
  if (data_.size() != n * l * d) {
    throw std::invalid_argument("TokenBatch data size " + std::to_string(data_.size()) +
                                " does not match shape product " + std::to_string(n * l * d));
  }
  validate();
}

void TokenBatch::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::invalid_argument("TokenBatch entry " + std::to_string(i) + " is not finite");
    }
  }
}

AxisStats axis_stats(const TokenBatch& x, AxisSet axes) {
  if (axes.empty()) throw std::invalid_argument("axis_stats: empty axis set");

  AxisStats s;
  s.axes = axes;
  s.n = axes.contains(Axis::Batch) ? 1 : x.n();
  s.l = axes.contains(Axis::Sequence) ? 1 : x.l();
  s.d = axes.contains(Axis::Feature) ? 1 : x.d();
  const std::size_t cells = s.n * s.l * s.d;
  const double count = static_cast<double>(x.size() / cells);

  s.mean.assign(cells, 0.0);
  s.variance.assign(cells, 0.0);

  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t l = 0; l < x.l(); ++l)
      for (std::size_t d = 0; d < x.d(); ++d) s.mean[s.index(n, l, d)] += x(n, l, d);
  for (double& m : s.mean) m /= count;

  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t l = 0; l < x.l(); ++l)
      for (std::size_t d = 0; d < x.d(); ++d) {
        const std::size_t i = s.index(n, l, d);
        const double c = x(n, l, d) - s.mean[i];
        s.variance[i] += c * c;
      }
  for (double& v : s.variance) v /= count;
  return s;
}

void softmax_into(std::span<const double> v, std::span<double> out) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  if (out.size() != v.size()) throw std::invalid_argument("softmax: output size mismatch");
  double hi = -INFINITY;
  for (double a : v) {
    if (!std::isfinite(a)) throw std::invalid_argument("softmax: non-finite input");
    hi = std::max(hi, a);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = std::exp(v[j] - hi);
    total += out[j];
  }
  for (double& p : out) p /= total;
}

std::vector<double> softmax_row(std::span<const double> v) {
  std::vector<double> out(v.size());
  softmax_into(v, out);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace normlens
