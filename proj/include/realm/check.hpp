#pragma once

// Math property suite behind `realm check`. The loss kernels are injectable so
// that a deliberately broken implementation can be shown to fail the suite.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "realm/model.hpp"
#include "realm/prng.hpp"
#include "realm/robust_loss.hpp"
#include "realm/spl.hpp"

namespace realm {

struct LossKernels {
  std::function<double(double, double)> rho_canonical = [](double t, double a) { return realm::rho_canonical(t, a); };
  std::function<double(double, double)> rho_prime = [](double t, double a) { return realm::rho_prime(t, a); };
  std::function<double(double, double)> rho_second = [](double t, double a) { return realm::rho_second(t, a); };
  std::function<double(double, double)> rho_prime_inv = [](double w, double a) { return realm::rho_prime_inv(w, a); };
  std::function<double(double, double)> g_reg = [](double w, double a) { return realm::g_reg(w, a); };
  std::function<double(double, const RobustParams&)> rho_general = [](double x, const RobustParams& p) {
    return realm::rho_general(x, p);
  };
  std::function<RhoGradient(double, const RobustParams&)> rho_grad = [](double x, const RobustParams& p) {
    return realm::rho_grad(x, p);
  };
  std::function<double(double, const RobustParams&)> rho_squared = [](double x, const RobustParams& p) {
    return realm::rho_squared(x, p);
  };
  std::function<RhoGradient(double, const RobustParams&)> rho_squared_grad = [](double x, const RobustParams& p) {
    return realm::rho_squared_grad(x, p);
  };
};

struct PropertyResult {
  std::string name;
  bool pass = true;
  double max_dev = 0.0;  // meaning depends on the property; 0 for pure sign checks
  std::string note;
};

struct CheckReport {
  std::vector<PropertyResult> results;

  [[nodiscard]] bool pass() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  }
  [[nodiscard]] const PropertyResult* find(const std::string& name) const {
    for (const auto& r : results) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
};

inline const std::vector<double>& check_alpha_grid() {
  static const std::vector<double> g = {0.15, 0.5, 1.0, 1.5, 1.9};
  return g;
}

inline std::string format_dev(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

namespace detail {

// Central difference of f at v.
template <class F>
double central_diff(F&& f, double v, double h) {
  return (f(v + h) - f(v - h)) / (2.0 * h);
}

// Deviation of `analytic` from `numeric` scaled so that <= 1 means within tolerance.
inline double scaled_dev(double analytic, double numeric, double rel, double abs) {
  return std::fabs(analytic - numeric) / std::fmax(abs, rel * std::fabs(numeric));
}

struct Recorder {
  PropertyResult r;
  explicit Recorder(std::string name) { r.name = std::move(name); }
  void dev(double d) {
    if (!(d <= r.max_dev)) r.max_dev = std::isnan(d) ? d : std::fmax(r.max_dev, d);
  }
  void require(bool ok, const std::string& why) {
    if (!ok && r.pass) r.note = why;
    r.pass = r.pass && ok;
  }
};

// Runs `body`; an exception fails the property and is recorded as its note.
template <class F>
PropertyResult guarded(const std::string& name, F&& body) {
  Recorder rec(name);
  try {
    body(rec);
  } catch (const std::exception& e) {
    rec.require(false, std::string("threw: ") + e.what());
  }
  if (std::isnan(rec.r.max_dev)) rec.require(false, "non-finite deviation");
  return rec.r;
}

}  // namespace detail

inline PropertyResult check_rho_boundary(const LossKernels& k) {
  return detail::guarded("rho(0) = 0 and rho'(0) = 1", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      const double r0 = k.rho_canonical(0.0, a);
      const double p0 = k.rho_prime(0.0, a);
      rec.dev(std::fabs(r0));
      rec.dev(std::fabs(p0 - 1.0));
      rec.require(r0 == 0.0 && p0 == 1.0, "boundary value off at alpha " + std::to_string(a));
    }
  });
}

inline PropertyResult check_rho_prime_shape(const LossKernels& k) {
  return detail::guarded("rho' in (0, 1] and strictly decreasing", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      double prev = k.rho_prime(0.0, a);
      for (int i = 1; i <= 1000; ++i) {
        const double w = k.rho_prime(0.01 * i, a);
        rec.require(w > 0.0 && w <= 1.0, "rho' outside (0, 1]");
        rec.require(w < prev, "rho' not strictly decreasing");
        prev = w;
      }
    }
  });
}

inline PropertyResult check_rho_second_negative(const LossKernels& k) {
  return detail::guarded("rho'' < 0", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      for (int i = 0; i <= 1000; ++i) {
        const double t = 0.01 * i;
        const double s = k.rho_second(t, a);
        rec.require(s < 0.0, "rho'' >= 0 at t " + std::to_string(t) + ", alpha " + std::to_string(a));
      }
    }
  });
}

inline PropertyResult check_derivative_chain(const LossKernels& k) {
  return detail::guarded("rho' and rho'' match finite differences", [&](detail::Recorder& rec) {
    const double h = 1e-5;
    for (double a : check_alpha_grid()) {
      for (double t : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
        const double d1 = detail::central_diff([&](double v) { return k.rho_canonical(v, a); }, t, h);
        const double d2 = detail::central_diff([&](double v) { return k.rho_prime(v, a); }, t, h);
        const double e1 = detail::scaled_dev(k.rho_prime(t, a), d1, 1e-6, 1e-9);
        const double e2 = detail::scaled_dev(k.rho_second(t, a), d2, 1e-6, 1e-9);
        rec.dev(std::fabs(k.rho_prime(t, a) - d1));
        rec.dev(std::fabs(k.rho_second(t, a) - d2));
        rec.require(e1 <= 1.0 && e2 <= 1.0, "derivative mismatch at t " + std::to_string(t));
      }
    }
  });
}

inline PropertyResult check_rho_prime_inverse(const LossKernels& k) {
  return detail::guarded("rho'^-1 round trip", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      for (int i = 0; i <= 1000; ++i) {
        const double t = 0.1 * i;
        const double back = k.rho_prime_inv(k.rho_prime(t, a), a);
        rec.dev(std::fabs(back - t));
        rec.require(std::fabs(back - t) <= 1e-9, "t round trip error above 1e-9");
      }
      for (int i = 1; i <= 10; ++i) {
        const double w = 0.1 * i;
        const double back = k.rho_prime(k.rho_prime_inv(w, a), a);
        rec.dev(std::fabs(back - w));
        rec.require(std::fabs(back - w) <= 1e-10, "w round trip error above 1e-10");
      }
    }
  });
}

inline PropertyResult check_g_at_one(const LossKernels& k) {
  return detail::guarded("g(1) = 0", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      const double g = k.g_reg(1.0, a);
      rec.dev(std::fabs(g));
      rec.require(std::fabs(g) <= 1e-12, "g(1) not zero");
    }
  });
}

inline PropertyResult check_g_convex(const LossKernels& k) {
  return detail::guarded("g'' > 0 on [0.01, 1]", [&](detail::Recorder& rec) {
    const double h = 1e-3;
    for (double a : check_alpha_grid()) {
      for (int i = 0; i <= 990; ++i) {
        const double w = 0.01 + 0.001 * i;
        const double lo = std::fmax(w - h, 0.5 * w);
        const double hi = std::fmin(w + h, 1.0);
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        const double g2 = (k.g_reg(hi, a) - 2.0 * k.g_reg(mid, a) + k.g_reg(lo, a)) / (half * half);
        rec.require(g2 > 0.0, "g'' <= 0 at w " + std::to_string(w));
      }
    }
  });
}

inline PropertyResult check_first_order(const LossKernels& k) {
  return detail::guarded("t + g'(rho'(t)) = 0", [&](detail::Recorder& rec) {
    const double h = 1e-7;
    for (double a : check_alpha_grid()) {
      for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double w = k.rho_prime(t, a);
        const double gp = detail::central_diff([&](double v) { return k.g_reg(v, a); }, w, std::fmin(h, 0.5 * w));
        rec.dev(std::fabs(t + gp));
        rec.require(std::fabs(t + gp) <= 1e-3, "first-order condition off at t " + std::to_string(t));
      }
    }
  });
}

inline PropertyResult check_canonical_reconciliation(const LossKernels& k) {
  return detail::guarded("rho_canonical(t) = rho_general(2 lambda t)", [&](detail::Recorder& rec) {
    for (double a : check_alpha_grid()) {
      for (double lam : {0.1, 1.0, 3.0}) {
        for (double t : {0.0, 0.1, 1.0, 5.0}) {
          const double lhs = k.rho_canonical(t, a);
          const double rhs = k.rho_general(2.0 * lam * t, {a, lam, 1.0});
          const double d = std::fabs(lhs - rhs);
          rec.dev(d);
          rec.require(d <= 1e-12 * std::fmax(1.0, std::fabs(lhs)), "forms disagree");
        }
      }
    }
  });
}

inline PropertyResult check_spl_equivalence(const LossKernels&) {
  return detail::guarded("SPL equivalence", [&](detail::Recorder& rec) {
    const auto r = equivalence_check(linear_grid(0.0, 10.0, 101), check_alpha_grid(), 1e-4, 1e-4);
    rec.dev(r.max_value_dev);
    rec.r.note = "max_w_dev " + format_dev(r.max_w_dev);
    rec.require(r.pass, "grid cell outside tolerance");
  });
}

/// Central differences of rho_general (or rho_squared) with h = 1e-6, rel 1e-5, abs 1e-8.
inline PropertyResult check_rho_grad(const LossKernels& k, bool squared = false) {
  const std::string name = squared ? "rho_squared gradient vs finite differences" : "rho gradient vs finite differences";
  return detail::guarded(name, [&](detail::Recorder& rec) {
    const auto f = [&](double x, const RobustParams& p) { return squared ? k.rho_squared(x, p) : k.rho_general(x, p); };
    const auto grad = [&](double x, const RobustParams& p) {
      return squared ? k.rho_squared_grad(x, p) : k.rho_grad(x, p);
    };
    const double h = 1e-6;
    for (double x : {0.01, 0.1, 1.0, 5.0}) {
      for (double a : {0.15, 0.5, 1.0, 1.5}) {
        for (double lam : {0.1, 1.0, 3.0}) {
          for (double c : {1.0, 2.0}) {
            const RobustParams p{a, lam, c};
            const auto g = grad(x, p);
            const double nx = detail::central_diff([&](double v) { return f(v, p); }, x, h);
            const double na = detail::central_diff([&](double v) { return f(x, {v, lam, c}); }, a, h);
            const double nl = detail::central_diff([&](double v) { return f(x, {a, v, c}); }, lam, h);
            for (auto [an, nu] : {std::pair{g.d_dx, nx}, std::pair{g.d_dalpha, na}, std::pair{g.d_dlambda, nl}}) {
              rec.dev(std::fabs(an - nu) / std::fmax(1.0, std::fabs(nu)));
              rec.require(detail::scaled_dev(an, nu, 1e-5, 1e-8) <= 1.0, "partial mismatch");
            }
          }
        }
      }
    }
  });
}

/// Entropy gradient of `count` seeded random model/input pairs against central
/// differences with h = 1e-5, rel 1e-4, abs 1e-7.
inline PropertyResult check_model_grad(std::uint64_t seed = 7, std::size_t count = 100) {
  return detail::guarded("entropy gradient vs finite differences", [&](detail::Recorder& rec) {
    SplitMix64 rng(seed);
    const double h = 1e-5;
    for (std::size_t n = 0; n < count; ++n) {
      auto m = ToyClassifier::random({2, 8, 3 + n % 3}, rng.next(), 1.0);
      for (double& v : m.head_weights) v = rng.gaussian(0.0, 1.0);
      for (double& v : m.gamma) v = rng.gaussian(1.0, 0.3);
      for (double& v : m.beta) v = rng.gaussian(0.0, 0.3);
      const std::vector<double> x = {rng.gaussian(0.0, 2.0), rng.gaussian(0.0, 2.0)};
      const auto eg = entropy_loss_and_grad(m, x);
      const auto idx = m.masked_indices();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        auto probe = m;
        const double orig = probe.affine(idx[i]);
        const auto at = [&](double v) {
          probe.affine(idx[i]) = v;
          return entropy(forward(probe, x).probs);
        };
        const double num = detail::central_diff(at, orig, h);
        rec.dev(std::fabs(eg.grad[i] - num));
        rec.require(detail::scaled_dev(eg.grad[i], num, 1e-4, 1e-7) <= 1.0, "gradient mismatch");
      }
    }
  });
}

inline CheckReport run_checks(const LossKernels& k = {}) {
  CheckReport rep;
  rep.results.push_back(check_rho_boundary(k));
  rep.results.push_back(check_rho_prime_shape(k));
  rep.results.push_back(check_rho_second_negative(k));
  rep.results.push_back(check_derivative_chain(k));
  rep.results.push_back(check_rho_prime_inverse(k));
  rep.results.push_back(check_g_at_one(k));
  rep.results.push_back(check_g_convex(k));
  rep.results.push_back(check_first_order(k));
  rep.results.push_back(check_canonical_reconciliation(k));
  rep.results.push_back(check_spl_equivalence(k));
  rep.results.push_back(check_rho_grad(k, false));
  rep.results.push_back(check_rho_grad(k, true));
  rep.results.push_back(check_model_grad());
  return rep;
}

inline void print_report(std::ostream& os, const CheckReport& rep) {
  for (const auto& r : rep.results) {
    os << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  max_dev=" << format_dev(r.max_dev);
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << '\n';
  }
  os << (rep.pass() ? "all properties pass" : "property suite FAILED") << '\n';
}

}  // namespace realm
