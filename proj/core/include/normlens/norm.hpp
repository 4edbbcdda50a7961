#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "normlens/tensor.hpp"

namespace normlens {

enum class NormMethod { BatchNorm, LayerNormTheory, LayerNormPractice, RMSNorm, UnitNorm };

// What to do with a token whose L2 norm is below NormConfig::norm_floor.
enum class ZeroNormPolicy {
  Guard,   // divide by max(||x||, norm_floor)
  Strict,  // throw std::domain_error
};

inline constexpr double kDefaultEps = 1e-5;
inline constexpr double kDefaultUnitNormK = 1.5;
inline constexpr double kDefaultNormFloor = 1e-12;

// Per-feature rescale/recenter applied after normalization: gamma * y + beta.
struct Affine {
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct NormConfig {
  NormMethod method = NormMethod::LayerNormPractice;
  double eps = kDefaultEps;  // variance regularizer for center-and-scale methods
  double k = kDefaultUnitNormK;  // UnitNorm modulus
  std::optional<Affine> affine;  // not allowed for UnitNorm
  ZeroNormPolicy zero_norm = ZeroNormPolicy::Guard;
  double norm_floor = kDefaultNormFloor;
};

std::string_view to_string(NormMethod m);
std::optional<NormMethod> parse_norm_method(std::string_view name);

// Axes the center-and-scale statistics are pooled over; empty for the
// norm-based methods (RMSNorm, UnitNorm).
AxisSet statistics_axes(NormMethod m);

// Throws std::invalid_argument if cfg is unusable for feature dim d.
void validate(const NormConfig& cfg, std::size_t d);

/// Forward normalization.
///
///  - BatchNorm:         stats over (batch, sequence), per feature
///  - LayerNormTheory:   stats over (sequence, feature), per batch element
///  - LayerNormPractice: stats over feature, per token
///  - RMSNorm:           sqrt(D) * x / ||x|| per token
///  - UnitNorm:          D^(k/2) * x / ||x|| per token, never affine
///
/// Center-and-scale methods return (x - mu) / sqrt(var + eps); a slice with
/// var + eps == 0 throws std::domain_error.
TokenBatch normalize(const TokenBatch& x, const NormConfig& cfg);

// Euclidean norm of every token, row-major N x L.
std::vector<double> token_l2_norms(const TokenBatch& x);

double l2_norm(std::span<const double> v);

// D^(k/2) * x / ||x|| for one token; throws std::invalid_argument on a zero vector.
std::vector<double> unit_normalize(std::span<const double> x, double k);

}  // namespace normlens
