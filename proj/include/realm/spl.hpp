#pragma once

// Self-paced learning view of the robust loss: min_w [w t + g(w; a)] equals
// rho_canonical(t; a), attained at w* = rho_prime(t; a).

#include <cmath>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include "realm/robust_loss.hpp"

namespace realm {

inline double closed_form_weight(double t, double alpha) { return rho_prime(t, alpha); }

inline double eata_closed_form_weight(double loss, double lambda) { return s_ent(loss, lambda); }

struct SplObjectiveSample {
  double t = 0.0;
  double alpha = 1.0;
  double resolution = 1e-4;

  void validate() const {
    detail::require_loss(t, "normalized loss t");
    detail::require_alpha(alpha);
    if (!(resolution > 0.0 && resolution <= 0.01)) {
      throw std::domain_error("w grid resolution must lie in (0, 0.01]");
    }
  }
};

struct WeightSearchResult {
  double w_star = 1.0;
  double value = 0.0;
};

/// Exhaustive minimization of w t + g(w; a) over w in {res, 2 res, ..., 1}.
inline WeightSearchResult brute_force_weight(const SplObjectiveSample& s) {
  s.validate();
  const auto n = static_cast<std::size_t>(std::ceil(1.0 / s.resolution - 1e-9));
  WeightSearchResult best{1.0, s.t + g_reg(1.0, s.alpha)};
  for (std::size_t i = 1; i <= n; ++i) {
    const double w = std::fmin(static_cast<double>(i) * s.resolution, 1.0);
    const double v = w * s.t + g_reg(w, s.alpha);
    if (v < best.value) best = {w, v};
  }
  return best;
}

/// Same search for the L1 regularizer g(w) = -lambda w, over w in {0, res, ..., 1}.
inline WeightSearchResult eata_brute_force_weight(double loss, double lambda, double resolution = 1e-4) {
  detail::require_loss(loss, "loss");
  if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
  WeightSearchResult best{0.0, 0.0};
  for (std::size_t i = 1; i <= n; ++i) {
    const double w = std::fmin(static_cast<double>(i) * resolution, 1.0);
    const double v = w * loss - lambda * w;
    if (v < best.value) best = {w, v};
  }
  return best;
}

struct EquivalenceCell {
  double t = 0.0;
  double alpha = 0.0;
  double value_dev = 0.0;
  double w_dev = 0.0;
  bool pass = false;
  std::string error;
};

struct EquivalenceReport {
  std::size_t t_count = 0;
  std::size_t alpha_count = 0;
  double resolution = 0.0;
  double tolerance = 0.0;
  double max_value_dev = 0.0;
  double max_w_dev = 0.0;
  bool pass = true;
  std::vector<EquivalenceCell> cells;
};

/// Checks the robust/regularized identity cell by cell. A cell that throws is
/// recorded as failed; the sweep always runs to completion.
inline EquivalenceReport equivalence_check(const std::vector<double>& t_grid, const std::vector<double>& alpha_grid,
                                           double tolerance = 1e-4, double resolution = 1e-4) {
  if (t_grid.empty() || alpha_grid.empty()) throw std::invalid_argument("grids must be non-empty");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");

  EquivalenceReport r;
  r.t_count = t_grid.size();
  r.alpha_count = alpha_grid.size();
  r.resolution = resolution;
  r.tolerance = tolerance;
  r.cells.reserve(t_grid.size() * alpha_grid.size());

  for (double alpha : alpha_grid) {
    for (double t : t_grid) {
      EquivalenceCell c;
      c.t = t;
      c.alpha = alpha;
      try {
        const auto bf = brute_force_weight({t, alpha, resolution});
        c.value_dev = std::fabs(bf.value - rho_canonical(t, alpha));
        c.w_dev = std::fabs(bf.w_star - rho_prime(t, alpha));
        c.pass = c.value_dev <= tolerance && c.w_dev <= 2.0 * resolution;
        r.max_value_dev = std::fmax(r.max_value_dev, c.value_dev);
        r.max_w_dev = std::fmax(r.max_w_dev, c.w_dev);
      } catch (const std::exception& e) {
        c.pass = false;
        c.error = e.what();
      }
      r.pass = r.pass && c.pass;
      r.cells.push_back(std::move(c));
    }
  }
  return r;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return g;
}

}  // namespace realm
