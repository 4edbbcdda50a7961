#include "normlens/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "normlens/parallel.hpp"

namespace normlens {

AttentionScores attention_scores(const TokenBatch& x, std::size_t scale_dim) {
  if (scale_dim == 0) throw std::invalid_argument("attention_scores: scale_dim must be positive");
  const std::size_t L = x.l();
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(scale_dim));
  AttentionScores out(x.n(), L);

  parallel_for(x.n(), [&](std::size_t n) {
    std::vector<double> logits(L);
    for (std::size_t i = 0; i < L; ++i) {
      const auto q = x.token(n, i);
      for (std::size_t j = 0; j < L; ++j) logits[j] = dot(q, x.token(n, j)) * inv_scale;
      softmax_into(logits, out.row(n, i));
    }
  });
  return out;
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

double chebyshev(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "chebyshev");
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "cosine_similarity");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double kl_divergence(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "kl_divergence");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0.0) continue;
    if (b[j] == 0.0) return INFINITY;
    s += a[j] * (std::log(a[j]) - std::log(b[j]));
  }
  // Rounding can leave a tiny negative sum for a ~= b.
  return std::max(s, 0.0);
}

double entropy(std::span<const double> a) {
  double h = 0.0;
  for (double p : a)
    if (p > 0.0) h -= p * std::log(p);
  return std::max(h, 0.0);
}

double SoftmaxTransform::apply(double v) const {
  switch (kind) {
    case TransformKind::Stretch: return param * v;
    case TransformKind::Translate: return v + param;
    case TransformKind::Reflect: return -v;
  }
  return v;
}

namespace {

// Indices sorted by decreasing value; false if two values tie.
bool strict_ranking(std::span<const double> v, std::vector<std::size_t>& order) {
  order.resize(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] > v[j]; });
  for (std::size_t r = 1; r < order.size(); ++r)
    if (v[order[r - 1]] == v[order[r]]) return false;
  return true;
}

// Ranked in log space: exp() of a large negative logit underflows to 0 and
// would manufacture ties between probabilities that are distinct.
std::vector<double> log_softmax(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double a : v) sum += std::exp(a - top);
  const double lse = std::log(sum);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - top) - lse;
  return out;
}

}  // namespace

OrderCheck softmax_order_invariance(std::span<const double> v, SoftmaxTransform transform) {
  if (transform.kind == TransformKind::Stretch && !(transform.param > 0.0)) {
    throw std::invalid_argument("stretch factor must be > 0");
  }
  std::vector<std::size_t> input_order;
  if (!strict_ranking(v, input_order)) {
    throw std::invalid_argument("softmax_order_invariance: tied entries have no defined order");
  }

  std::vector<double> moved(v.size());
  std::transform(v.begin(), v.end(), moved.begin(), [&](double a) { return transform.apply(a); });
  const auto before = log_softmax(v);
  const auto after = log_softmax(moved);

  std::vector<std::size_t> order_before, order_after;
  OrderCheck result;
  if (!strict_ranking(before, order_before) || !strict_ranking(after, order_after)) return result;
  result.preserved = order_before == order_after;
  result.reversed = std::equal(order_before.begin(), order_before.end(), order_after.rbegin());
  return result;
}

}  // namespace normlens
