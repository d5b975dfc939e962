#pragma once

// Entropy objective and the adaptive robust loss family applied to it.
//
// Two argument conventions are exposed. The canonical form takes the
// normalized loss t = L / lambda and is the one for which the self-paced
// learning identities hold exactly:
//
//   rho(t) = |a-2|/a * ((2t/|a-2| + 1)^(a/2) - 1)
//
// The general form takes the raw loss x and is what the adaptation engine
// minimizes:
//
//   rho(x; a, lambda, C) = |a-2|/a * C * (((x/lambda)/|a-2| + 1)^(a/2) - 1)
//
// so rho_canonical(t) == rho_general(2 * lambda * t) with C = 1.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace realm {

inline constexpr double kAlphaMin = 1e-3;
inline constexpr double kAlphaMax = 2.0;
inline constexpr double kAlphaDegen = 1e-6;
inline constexpr double kLambdaMin = 1e-4;
inline constexpr double kLambdaMax = 100.0;
inline constexpr double kProbSumTolerance = 1e-9;

struct RobustParams {
  double alpha = 0.15;
  double lambda = 1.0;
  double scale_c = 1.0;

  void validate() const {
    if (!(alpha >= kAlphaMin && alpha <= kAlphaMax)) {
      throw std::domain_error("alpha outside [" + std::to_string(kAlphaMin) + ", 2]");
    }
    if (!(lambda >= kLambdaMin && lambda <= kLambdaMax)) {
      throw std::domain_error("lambda outside [" + std::to_string(kLambdaMin) + ", " +
                              std::to_string(kLambdaMax) + "]");
    }
    if (!(scale_c > 0.0) || !std::isfinite(scale_c)) {
      throw std::domain_error("scale constant C must be positive");
    }
  }

  // Clamps alpha and lambda back into their admissible boxes.
  [[nodiscard]] RobustParams projected() const {
    RobustParams p = *this;
    p.alpha = std::fmin(std::fmax(p.alpha, kAlphaMin), kAlphaMax);
    p.lambda = std::fmin(std::fmax(p.lambda, kLambdaMin), kLambdaMax);
    return p;
  }
};

inline bool is_degenerate_alpha(double alpha) { return alpha >= kAlphaMax - kAlphaDegen; }

/// Throws std::invalid_argument unless `p` has K >= 2 finite non-negative
/// entries summing to one within kProbSumTolerance.
inline void validate_probabilities(std::span<const double> p) {
  if (p.size() < 2) throw std::invalid_argument("probability vector needs at least 2 classes");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("probability entries must be finite and non-negative");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > kProbSumTolerance) {
    throw std::invalid_argument("probability entries must sum to 1");
  }
}

/// Validated class-probability vector.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) { validate_probabilities(p_); }

  [[nodiscard]] std::span<const double> values() const { return p_; }
  [[nodiscard]] std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Shannon entropy in nats, with 0 ln 0 = 0.
inline double entropy(std::span<const double> p) {
  validate_probabilities(p);
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h < 0.0 ? 0.0 : h;
}

inline double entropy(const ProbVector& p) { return entropy(p.values()); }

namespace detail {

inline void require_loss(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be finite and non-negative");
  }
}

inline void require_alpha(double alpha) {
  if (!(alpha >= kAlphaMin && alpha <= kAlphaMax)) {
    throw std::domain_error("alpha outside [" + std::to_string(kAlphaMin) + ", 2]");
  }
}

// Shared kernel: (e/a) * ((q/e + 1)^(a/2) - 1) with e = |a - 2|, and its
// a -> 2 limit q/2.
inline double core(double q, double alpha) {
  if (is_degenerate_alpha(alpha)) return 0.5 * q;
  const double e = kAlphaMax - alpha;
  return (e / alpha) * std::expm1(0.5 * alpha * std::log1p(q / e));
}

struct CoreGrad {
  double d_dq;
  double d_dalpha;
};

inline CoreGrad core_grad(double q, double alpha) {
  if (is_degenerate_alpha(alpha)) return {0.5, 0.0};
  const double e = kAlphaMax - alpha;
  const double log_u = std::log1p(q / e);
  const double u = 1.0 + q / e;
  const double pm1 = std::expm1(0.5 * alpha * log_u);  // u^(a/2) - 1
  const double p = pm1 + 1.0;
  CoreGrad g{};
  g.d_dq = 0.5 * std::exp(0.5 * (alpha - 2.0) * log_u);
  // d/da [(e/a)(P - 1)] with de/da = -1 and du/da = q / e^2.
  g.d_dalpha = -2.0 * pm1 / (alpha * alpha) + p * (e / (2.0 * alpha) * log_u + q / (2.0 * e * u));
  return g;
}

}  // namespace detail

inline double rho_canonical(double t, double alpha) {
  detail::require_loss(t, "normalized loss t");
  detail::require_alpha(alpha);
  return detail::core(2.0 * t, alpha);
}

inline double rho_general(double x, const RobustParams& params) {
  detail::require_loss(x, "loss");
  params.validate();
  return params.scale_c * detail::core(x / params.lambda, params.alpha);
}

/// Squared-argument variant: the loss enters as (x / lambda)^2.
inline double rho_squared(double x, const RobustParams& params) {
  detail::require_loss(x, "loss");
  params.validate();
  const double s = x / params.lambda;
  return params.scale_c * detail::core(s * s, params.alpha);
}

/// d rho_canonical / dt = (2t/|a-2| + 1)^((a-2)/2); equals 1 for degenerate alpha.
inline double rho_prime(double t, double alpha) {
  detail::require_loss(t, "normalized loss t");
  detail::require_alpha(alpha);
  if (is_degenerate_alpha(alpha)) return 1.0;
  const double e = kAlphaMax - alpha;
  return std::exp(0.5 * (alpha - 2.0) * std::log1p(2.0 * t / e));
}

inline double rho_second(double t, double alpha) {
  detail::require_loss(t, "normalized loss t");
  detail::require_alpha(alpha);
  if (is_degenerate_alpha(alpha)) return 0.0;
  const double e = kAlphaMax - alpha;
  return ((alpha - 2.0) / e) * std::exp((0.5 * alpha - 2.0) * std::log1p(2.0 * t / e));
}

/// Inverse of rho_prime on w in (0, 1].
inline double rho_prime_inv(double w, double alpha) {
  detail::require_alpha(alpha);
  if (is_degenerate_alpha(alpha)) throw std::domain_error("rho_prime is not invertible at alpha = 2");
  if (!(w > 0.0 && w <= 1.0)) throw std::domain_error("weight must lie in (0, 1]");
  const double e = kAlphaMax - alpha;
  return 0.5 * e * std::expm1(2.0 / (alpha - 2.0) * std::log(w));
}

/// Explicit self-paced regularizer whose w-minimization reproduces rho_canonical.
inline double g_reg(double w, double alpha) {
  detail::require_alpha(alpha);
  if (is_degenerate_alpha(alpha)) throw std::domain_error("regularizer is undefined at alpha = 2");
  if (!(w > 0.0) || !std::isfinite(w)) throw std::domain_error("weight must be positive");
  const double e = kAlphaMax - alpha;
  return (e / alpha) * (std::pow(w, alpha / (alpha - 2.0)) * (1.0 - 0.5 * alpha) + 0.5 * alpha * w - 1.0);
}

/// Hard-capped (Talwar) loss: identity up to lambda, constant lambda after.
inline double rho_eata(double x, double lambda) {
  detail::require_loss(x, "loss");
  if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
  return x <= lambda ? x : lambda;
}

/// Entropy reliability weight exp(lambda - L) * 1{L < lambda}. Not bounded by 1.
inline double s_ent(double loss, double lambda) {
  detail::require_loss(loss, "loss");
  if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
  return loss < lambda ? std::exp(lambda - loss) : 0.0;
}

struct RhoGradient {
  double d_dx = 0.0;
  double d_dalpha = 0.0;
  double d_dlambda = 0.0;
};

/// Analytic partials of rho_general. d_dalpha is 0 for degenerate alpha.
inline RhoGradient rho_grad(double x, const RobustParams& params) {
  detail::require_loss(x, "loss");
  params.validate();
  const double lam = params.lambda;
  const auto g = detail::core_grad(x / lam, params.alpha);
  return {params.scale_c * g.d_dq / lam, params.scale_c * g.d_dalpha,
          -params.scale_c * g.d_dq * x / (lam * lam)};
}

/// Analytic partials of rho_squared.
inline RhoGradient rho_squared_grad(double x, const RobustParams& params) {
  detail::require_loss(x, "loss");
  params.validate();
  const double lam = params.lambda;
  const double s = x / lam;
  const auto g = detail::core_grad(s * s, params.alpha);
  return {params.scale_c * g.d_dq * 2.0 * x / (lam * lam), params.scale_c * g.d_dalpha,
          -params.scale_c * g.d_dq * 2.0 * x * x / (lam * lam * lam)};
}

}  // namespace realm
