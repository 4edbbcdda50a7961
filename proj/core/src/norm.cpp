#include "normlens/norm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace normlens {

std::string_view to_string(NormMethod m) {
  switch (m) {
    case NormMethod::BatchNorm: return "BatchNorm";
    case NormMethod::LayerNormTheory: return "LayerNormTheory";
    case NormMethod::LayerNormPractice: return "LayerNormPractice";
    case NormMethod::RMSNorm: return "RMSNorm";
    case NormMethod::UnitNorm: return "UnitNorm";
  }
  return "unknown";
}

std::optional<NormMethod> parse_norm_method(std::string_view name) {
  for (NormMethod m : {NormMethod::BatchNorm, NormMethod::LayerNormTheory,
                       NormMethod::LayerNormPractice, NormMethod::RMSNorm, NormMethod::UnitNorm}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

AxisSet statistics_axes(NormMethod m) {
  switch (m) {
    case NormMethod::BatchNorm: return {Axis::Batch, Axis::Sequence};
    case NormMethod::LayerNormTheory: return {Axis::Sequence, Axis::Feature};
    case NormMethod::LayerNormPractice: return {Axis::Feature};
    case NormMethod::RMSNorm:
    case NormMethod::UnitNorm: return {};
  }
  return {};
}

void validate(const NormConfig& cfg, std::size_t d) {
  if (!(cfg.eps >= 0.0) || !std::isfinite(cfg.eps)) {
    throw std::invalid_argument("eps must be finite and >= 0");
  }
  if (!std::isfinite(cfg.k)) throw std::invalid_argument("k must be finite");
  if (!(cfg.norm_floor >= 0.0)) throw std::invalid_argument("norm_floor must be >= 0");
  if (cfg.affine) {
    if (cfg.method == NormMethod::UnitNorm) {
      throw std::invalid_argument("UnitNorm takes no affine parameters");
    }
    if (cfg.affine->gamma.size() != d || cfg.affine->beta.size() != d) {
      throw std::invalid_argument("affine gamma/beta must have length D=" + std::to_string(d));
    }
  }
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

std::vector<double> token_l2_norms(const TokenBatch& x) {
  std::vector<double> out(x.n() * x.l());
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t l = 0; l < x.l(); ++l) out[n * x.l() + l] = l2_norm(x.token(n, l));
  return out;
}

std::vector<double> unit_normalize(std::span<const double> x, double k) {
  const double norm = l2_norm(x);
  if (!(norm > 0.0)) throw std::invalid_argument("unit_normalize: zero vector");
  const double scale = std::pow(static_cast<double>(x.size()), 0.5 * k) / norm;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
  return out;
}

namespace {

void center_and_scale(const TokenBatch& x, TokenBatch& out, AxisSet axes, double eps) {
  const AxisStats s = axis_stats(x, axes);
  for (std::size_t i = 0; i < s.variance.size(); ++i) {
    if (!(s.variance[i] + eps > 0.0)) {
      throw std::domain_error("normalize: zero-variance slice with eps = 0");
    }
  }
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t l = 0; l < x.l(); ++l)
      for (std::size_t d = 0; d < x.d(); ++d) {
        const std::size_t c = s.index(n, l, d);
        out(n, l, d) = (x(n, l, d) - s.mean[c]) / std::sqrt(s.variance[c] + eps);
      }
}

void rescale_tokens(const TokenBatch& x, TokenBatch& out, double target, const NormConfig& cfg) {
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t l = 0; l < x.l(); ++l) {
      const auto src = x.token(n, l);
      double norm = l2_norm(src);
      if (norm < cfg.norm_floor || norm == 0.0) {
        if (cfg.zero_norm == ZeroNormPolicy::Strict) {
          throw std::domain_error("normalize: token (" + std::to_string(n) + ", " +
                                  std::to_string(l) + ") has norm below floor");
        }
        norm = std::max(norm, cfg.norm_floor);
        if (norm == 0.0) continue;  // floor of 0 with a zero token: output stays 0
      }
      const double scale = target / norm;
      auto dst = out.token(n, l);
      for (std::size_t d = 0; d < src.size(); ++d) dst[d] = scale * src[d];
    }
}

}  // namespace

TokenBatch normalize(const TokenBatch& x, const NormConfig& cfg) {
  validate(cfg, x.d());
  TokenBatch out(x.n(), x.l(), x.d());
  const double dim = static_cast<double>(x.d());

  switch (cfg.method) {
    case NormMethod::BatchNorm:
    case NormMethod::LayerNormTheory:
    case NormMethod::LayerNormPractice:
      center_and_scale(x, out, statistics_axes(cfg.method), cfg.eps);
      break;
    case NormMethod::RMSNorm:
      rescale_tokens(x, out, std::sqrt(dim), cfg);
      break;
    case NormMethod::UnitNorm:
      rescale_tokens(x, out, std::pow(dim, 0.5 * cfg.k), cfg);
      break;
  }

  if (cfg.affine) {
    const auto& g = cfg.affine->gamma;
    const auto& b = cfg.affine->beta;
    for (std::size_t n = 0; n < x.n(); ++n)
      for (std::size_t l = 0; l < x.l(); ++l) {
        auto t = out.token(n, l);
        for (std::size_t d = 0; d < t.size(); ++d) t[d] = g[d] * t[d] + b[d];
      }
  }
  return out;
}

}  // namespace normlens
