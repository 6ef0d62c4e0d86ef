#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fblab/common.hpp"
#include "fblab/interp.hpp"
#include "fblab/profile_data.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

/// A reaction term beta together with its derivative and primitive
/// Phi(t) = integral of beta from 0 to t. Immutable after construction.
struct ReactionTerm {
  std::string name;
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  std::function<double(double)> primitive;
  double support_lo = 0.0;
  double support_hi = 1.0;
  double mass = 1.0;

  double operator()(double t) const { return eval(t); }
};

/// beta(t) = c t^2 (1-t)^2 on [0,1], zero elsewhere. The target mass is 1 for
/// an admissible term; c = 30 * mass since the bare polynomial integrates to
/// 1/30. beta' vanishes at both ends, so beta is C^1 on the real line.
inline ReactionTerm make_polynomial_beta(double normalization = 1.0) {
  const double c = 30.0 * normalization;
  ReactionTerm b;
  b.name = "poly2";
  b.eval = [c](double t) { return (t <= 0.0 || t >= 1.0) ? 0.0 : c * t * t * sqr(1.0 - t); };
  b.deriv = [c](double t) {
    return (t <= 0.0 || t >= 1.0) ? 0.0 : 2.0 * c * t * (1.0 - t) * (1.0 - 2.0 * t);
  };
  b.primitive = [c](double t) {
    const double x = std::clamp(t, 0.0, 1.0);
    const double x3 = x * x * x;
    return c * (x3 / 3.0 - 0.5 * x3 * x + 0.2 * x3 * x * x);
  };
  b.mass = normalization;
  return b;
}

inline ReactionTerm make_zero_beta() {
  ReactionTerm b;
  b.name = "zero";
  b.eval = [](double) { return 0.0; };
  b.deriv = [](double) { return 0.0; };
  b.primitive = [](double) { return 0.0; };
  b.mass = 0.0;
  return b;
}

/// Tabulated term through nodes (t_k, beta_k); cubic Hermite with
/// fourth-order local slopes. Zero outside [t_0, t_last].
inline ReactionTerm make_tabulated_beta(std::vector<double> ts, std::vector<double> betas,
                                        std::string name = "table") {
  if (ts.size() < 3) throw InvalidParameter("tabulated beta needs at least three nodes");
  std::vector<double> slopes(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) slopes[k] = local_derivative(ts, betas, k);
  auto curve = std::make_shared<const HermiteCubic>(std::move(ts), std::move(betas), std::move(slopes));
  ReactionTerm b;
  b.name = std::move(name);
  b.support_lo = curve->front();
  b.support_hi = curve->back();
  b.eval = [curve](double t) {
    return (t < curve->front() || t > curve->back()) ? 0.0 : (*curve)(t);
  };
  b.deriv = [curve](double t) {
    return (t < curve->front() || t > curve->back()) ? 0.0 : curve->derivative(t);
  };
  b.primitive = [curve](double t) {
    // Primitive is anchored at 0: the table never starts below 0 for
    // admissible terms, so integral from t_0 equals integral from 0.
    if (t <= curve->front()) return 0.0;
    return curve->integral(t);
  };
  b.mass = curve->integral(curve->back());
  return b;
}

/// Tabulates any term on a uniform grid of [lo, hi] (for CSV export).
struct ReactionTable {
  std::vector<double> t, beta, beta_prime, phi;
};

inline ReactionTable tabulate(const ReactionTerm& b, double lo, double hi, std::size_t n) {
  ReactionTable tab;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    tab.t.push_back(t);
    tab.beta.push_back(b.eval(t));
    tab.beta_prime.push_back(b.deriv(t));
    tab.phi.push_back(b.primitive(t));
  }
  return tab;
}

struct A1Clause {
  bool passed = false;
  double defect = 0.0;
};

/// Per-clause outcome of the admissibility check; failures are reported, not
/// thrown.
struct A1Report {
  A1Clause nonnegative;
  A1Clause support;
  A1Clause c1;
  A1Clause mass;
  double measured_mass = 0.0;
  bool all() const { return nonnegative.passed && support.passed && c1.passed && mass.passed; }
};

inline A1Report validate_A1(const ReactionTerm& b, double mass_tol = 1e-10) {
  A1Report r;
  constexpr int samples = 3000;
  double neg = 0.0, outside = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = -1.0 + 3.0 * k / samples;
    const double v = b.eval(t);
    neg = std::max(neg, -v);
    if (t < 0.0 || t > 1.0) outside = std::max(outside, std::abs(v));
  }
  r.nonnegative = {neg <= 0.0, neg};
  r.support = {outside <= 1e-14, outside};

  // Centered differences at three step sizes. A C^1 term with a consistent
  // derivative shows errors shrinking with h (at least linearly where beta''
  // jumps); a kink or a wrong derivative leaves an O(1) error.
  constexpr std::array<double, 3> hs{1e-3, 1e-4, 1e-5};
  double worst = 0.0;
  bool ok = true;
  std::vector<double> points{0.0, 1.0};
  for (int k = -10; k <= 30; ++k) points.push_back(0.05 * k - 0.0123);
  for (double t : points) {
    std::array<double, 3> err{};
    for (std::size_t j = 0; j < hs.size(); ++j) {
      const double h = hs[j];
      err[j] = std::abs((b.eval(t + h) - b.eval(t - h)) / (2.0 * h) - b.deriv(t));
    }
    const double scale = 1.0 + std::abs(b.deriv(t));
    worst = std::max(worst, err[2]);
    const bool tiny = err[2] <= 1e-7 * scale;
    const bool converging = err[2] <= 0.2 * err[0] && err[1] <= err[0] * 1.0001;
    if (!tiny && !converging) ok = false;
  }
  r.c1 = {ok, worst};

  const double lo = std::min(0.0, b.support_lo);
  const double hi = std::max(1.0, b.support_hi);
  r.measured_mass = simpson(b.eval, lo, hi, 1e-12).value;
  const double md = std::abs(r.measured_mass - 1.0);
  r.mass = {md <= mass_tol, md};
  return r;
}

/// The term t -> beta(t/eps)/eps concentrating on [0, eps].
struct EpsilonScaling {
  double epsilon = 1.0;
  ReactionTerm base;

  double eval(double t) const { return base.eval(t / epsilon) / epsilon; }
  double deriv(double t) const { return base.deriv(t / epsilon) / (epsilon * epsilon); }
  double primitive(double t) const { return base.primitive(t / epsilon); }

  ReactionTerm as_term() const {
    ReactionTerm r;
    r.name = base.name + "@eps";
    const double e = epsilon;
    auto b = std::make_shared<const ReactionTerm>(base);
    r.eval = [e, b](double t) { return b->eval(t / e) / e; };
    r.deriv = [e, b](double t) { return b->deriv(t / e) / (e * e); };
    r.primitive = [e, b](double t) { return b->primitive(t / e); };
    r.support_lo = base.support_lo * e;
    r.support_hi = base.support_hi * e;
    r.mass = base.mass;
    return r;
  }
};

inline EpsilonScaling rescale(const ReactionTerm& b, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidParameter("rescale: epsilon must be a positive finite number");
  return EpsilonScaling{epsilon, b};
}

struct RecoveredBeta {
  ReactionTerm beta;
  double mass = 0.0;            // integral of the recovered table over [0,1]
  double slope_identity = 0.0;  // v'(+inf)^2 - v'(-inf)^2 from the end samples
  double tail_ratio = 0.0;      // v'''/v' at the lowest sample
  bool tail_warning = false;    // tail ratio not small: beta may fail C^1 at 0
};

/// Inverse construction: given an increasing convex profile v, the term with
/// beta(v(x)) = 2 v''(x). v'' comes from a fourth-order local derivative of
/// the sampled v'.
inline RecoveredBeta beta_from_profile(const Profile1D& v, double tail_tol = 1e-2) {
  const std::size_t m = v.xs.size();
  if (m < 5) throw InvalidParameter("beta_from_profile: need at least five samples");
  for (std::size_t k = 1; k < m; ++k) {
    if (!(v.xs[k] > v.xs[k - 1])) throw InvalidParameter("beta_from_profile: abscissae must increase");
    if (!(v.us[k] > v.us[k - 1]))
      throw InversionError("beta_from_profile: profile is not strictly increasing, v^{-1} undefined");
  }
  if (v.us.front() < 0.0) throw InversionError("beta_from_profile: profile must be non-negative");

  std::vector<double> second(m);
  for (std::size_t k = 0; k < m; ++k) second[k] = local_derivative(v.xs, v.dus, k);

  std::vector<double> ts{0.0}, bs{0.0};
  for (std::size_t k = 0; k < m; ++k) {
    const double t = v.us[k];
    if (t <= 0.0 || t >= 1.0) continue;
    if (t <= ts.back()) continue;
    ts.push_back(t);
    bs.push_back(std::max(0.0, 2.0 * second[k]));
  }
  if (ts.back() < 1.0) {
    ts.push_back(1.0);
    bs.push_back(0.0);
  }
  if (ts.size() < 3) {
    // No samples inside (0,1): beta is identically zero there.
    ts = {0.0, 0.5, 1.0};
    bs = {0.0, 0.0, 0.0};
  }

  RecoveredBeta out;
  out.beta = make_tabulated_beta(std::move(ts), std::move(bs), "from_profile");
  out.mass = out.beta.mass;
  out.slope_identity = sqr(v.dus.back()) - sqr(v.dus.front());
  const double third = local_derivative(v.xs, second, 0);
  out.tail_ratio = v.dus.front() != 0.0 ? third / v.dus.front() : std::numeric_limits<double>::infinity();
  out.tail_warning = !(std::abs(out.tail_ratio) <= tail_tol);
  return out;
}

}  // namespace fblab
