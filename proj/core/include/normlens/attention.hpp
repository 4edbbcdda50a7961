#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "normlens/tensor.hpp"

namespace normlens {

/// Row-stochastic self-attention scores, shape N x L x L.
/// row(n, i) is the distribution of anchor token i over sequence n.
class AttentionScores {
 public:
  AttentionScores(std::size_t n, std::size_t l) : n_(n), l_(l), rows_(n * l * l, 0.0) {}

  std::size_t n() const { return n_; }
  std::size_t l() const { return l_; }

  std::span<const double> row(std::size_t n, std::size_t i) const {
    return {rows_.data() + (n * l_ + i) * l_, l_};
  }
  std::span<double> row(std::size_t n, std::size_t i) {
    return {rows_.data() + (n * l_ + i) * l_, l_};
  }

 private:
  std::size_t n_;
  std::size_t l_;
  std::vector<double> rows_;
};

// rows[n, i] = softmax(x[n, i] . x[n]^T / sqrt(scale_dim)); queries and keys
// are the tokens themselves (no projections).
AttentionScores attention_scores(const TokenBatch& x, std::size_t scale_dim);
inline AttentionScores attention_scores(const TokenBatch& x) { return attention_scores(x, x.d()); }

// Distances between two attention rows. All throw std::invalid_argument on a
// length mismatch.
double chebyshev(std::span<const double> a, std::span<const double> b);
// Throws std::invalid_argument if either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
// D(a || b); +infinity when some b_j == 0 < a_j.
double kl_divergence(std::span<const double> a, std::span<const double> b);
// Shannon entropy in nats, 0 log 0 := 0.
double entropy(std::span<const double> a);

enum class TransformKind { Stretch, Translate, Reflect };

struct SoftmaxTransform {
  TransformKind kind;
  double param = 0.0;  // stretch factor (> 0) or translation offset

  static SoftmaxTransform stretch(double c) { return {TransformKind::Stretch, c}; }
  static SoftmaxTransform translate(double a) { return {TransformKind::Translate, a}; }
  static SoftmaxTransform reflect() { return {TransformKind::Reflect, 0.0}; }

  double apply(double v) const;
};

struct OrderCheck {
  bool preserved = false;  // softmax(f(v)) ranks entries exactly as softmax(v)
  bool reversed = false;   // ranking is exactly inverted
};

// Importance order of softmax(v) vs softmax(f(v)). Tied entries in v have no
// defined order and throw std::invalid_argument.
OrderCheck softmax_order_invariance(std::span<const double> v, SoftmaxTransform transform);

}  // namespace normlens
