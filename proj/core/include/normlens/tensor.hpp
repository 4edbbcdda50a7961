#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace normlens {

// Axes of an N x L x D token batch.
enum class Axis : unsigned { Batch = 1u, Sequence = 2u, Feature = 4u };

class AxisSet {
 public:
  constexpr AxisSet() = default;
  constexpr AxisSet(std::initializer_list<Axis> axes) {
    for (Axis a : axes) bits_ |= static_cast<unsigned>(a);
  }

  constexpr bool contains(Axis a) const { return (bits_ & static_cast<unsigned>(a)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool operator==(const AxisSet&) const = default;

 private:
  unsigned bits_ = 0;
};

/// Dense real64 array of shape (N, L, D), row-major with D fastest.
///
/// Every entry is finite; the validating constructor rejects NaN/Inf and
/// zero-sized dimensions with std::invalid_argument.
class TokenBatch {
 public:
  TokenBatch(std::size_t n, std::size_t l, std::size_t d);
  TokenBatch(std::size_t n, std::size_t l, std::size_t d, std::vector<double> data);

  std::size_t n() const { return n_; }
  std::size_t l() const { return l_; }
  std::size_t d() const { return d_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t n, std::size_t l, std::size_t d) const {
    return data_[(n * l_ + l) * d_ + d];
  }
  double& operator()(std::size_t n, std::size_t l, std::size_t d) {
    return data_[(n * l_ + l) * d_ + d];
  }

  std::span<const double> token(std::size_t n, std::size_t l) const {
    return {data_.data() + (n * l_ + l) * d_, d_};
  }
  std::span<double> token(std::size_t n, std::size_t l) {
    return {data_.data() + (n * l_ + l) * d_, d_};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  // Throws std::invalid_argument if any entry is non-finite.
  void validate() const;

 private:
  std::size_t n_;
  std::size_t l_;
  std::size_t d_;
  std::vector<double> data_;
};

/// Population mean and variance over a set of axes.
///
/// The reduced arrays keep the (N, L, D) rank with extent 1 on every reduced
/// axis, so `mean_at(n, l, d)` broadcasts back onto the source shape.
struct AxisStats {
  std::size_t n = 1;
  std::size_t l = 1;
  std::size_t d = 1;
  AxisSet axes;
  std::vector<double> mean;
  std::vector<double> variance;

  std::size_t index(std::size_t bn, std::size_t bl, std::size_t bd) const {
    const std::size_t i = axes.contains(Axis::Batch) ? 0 : bn;
    const std::size_t j = axes.contains(Axis::Sequence) ? 0 : bl;
    const std::size_t k = axes.contains(Axis::Feature) ? 0 : bd;
    return (i * l + j) * d + k;
  }
  double mean_at(std::size_t bn, std::size_t bl, std::size_t bd) const {
    return mean[index(bn, bl, bd)];
  }
  double variance_at(std::size_t bn, std::size_t bl, std::size_t bd) const {
    return variance[index(bn, bl, bd)];
  }
};

// Two-pass (mean, then centered second moment) biased statistics.
AxisStats axis_stats(const TokenBatch& x, AxisSet axes);

// Max-subtracted softmax. Throws std::invalid_argument on NaN or empty input.
std::vector<double> softmax_row(std::span<const double> v);
void softmax_into(std::span<const double> v, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace normlens
