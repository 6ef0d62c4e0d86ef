#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fblab/common.hpp"
#include "fblab/field.hpp"
#include "fblab/profile_data.hpp"
#include "fblab/quadrature.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

namespace detail {

inline double sup_abs_derivative(const ReactionTerm& beta) {
  double m = 0.0;
  const double lo = std::min(0.0, beta.support_lo), hi = std::max(1.0, beta.support_hi);
  for (int k = 0; k <= 2000; ++k) m = std::max(m, std::abs(beta.deriv(lo + (hi - lo) * k / 2000.0)));
  return m;
}

// Classical RK4 for (u, v)' = (v, beta(u)/2) with signed step h.
inline void rk4_step(const ReactionTerm& beta, double& u, double& v, double h) {
  const double k1u = v;
  const double k1v = 0.5 * beta.eval(u);
  const double k2u = v + 0.5 * h * k1v;
  const double k2v = 0.5 * beta.eval(u + 0.5 * h * k1u);
  const double k3u = v + 0.5 * h * k2v;
  const double k3v = 0.5 * beta.eval(u + 0.5 * h * k2u);
  const double k4u = v + h * k3v;
  const double k4v = 0.5 * beta.eval(u + h * k3u);
  u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

}  // namespace detail

/// Integrates u'' = beta(u)/2 in both directions from the anchor
/// u(x0) = u0, u'(x0) = v0 on [x0 - halfwidth, x0 + halfwidth].
inline Profile1D shoot_from(const ReactionTerm& beta, double x0, double u0, double v0,
                            double halfwidth, double step) {
  if (!(step > 0.0) || !(halfwidth > 0.0)) throw InvalidParameter("shoot: step and halfwidth must be positive");
  if (step * detail::sup_abs_derivative(beta) >= 1.0)
    throw InvalidParameter("shoot: step too large for this reaction term (step * sup|beta'| >= 1)");
  const auto half = static_cast<long long>(std::llround(halfwidth / step));
  if (half < 2) throw InvalidParameter("shoot: halfwidth must span at least two steps");
  const std::size_t m = static_cast<std::size_t>(2 * half + 1);
  Profile1D p;
  p.xs.resize(m);
  p.us.resize(m);
  p.dus.resize(m);
  for (long long k = 0; k < static_cast<long long>(m); ++k)
    p.xs[static_cast<std::size_t>(k)] = x0 + static_cast<double>(k - half) * step;
  const auto mid = static_cast<std::size_t>(half);
  p.us[mid] = u0;
  p.dus[mid] = v0;
  constexpr double blow_up = 1e150;
  for (int dir : {1, -1}) {
    double u = u0, v = v0;
    const double h = dir * step;
    for (long long k = 1; k <= half; ++k) {
      detail::rk4_step(beta, u, v, h);
      if (!std::isfinite(u) || std::abs(u) > blow_up)
        throw DomainError("shoot: solution left the representable range; shrink the domain");
      const auto idx = static_cast<std::size_t>(static_cast<long long>(mid) + dir * k);
      p.us[idx] = u;
      p.dus[idx] = v;
    }
  }
  p.finalize();
  return p;
}

/// Standard anchor u(1) = 1, u'(1) = a.
inline Profile1D shoot(const ReactionTerm& beta, double a, double halfwidth, double step) {
  if (!(a > 0.0)) throw InvalidParameter("shoot: anchor slope a must be positive");
  return shoot_from(beta, 1.0, 1.0, a, halfwidth, step);
}

/// Mirror anchor u(-1) = 1, u'(-1) = -a; reproduces the mirror image of
/// shoot(beta, a, ...) bit for bit.
inline Profile1D shoot_reflected(const ReactionTerm& beta, double a, double halfwidth, double step) {
  if (!(a > 0.0)) throw InvalidParameter("shoot: anchor slope a must be positive");
  return shoot_from(beta, -1.0, 1.0, -a, halfwidth, step);
}

/// The increasing profile tending to 0 at -infinity, built from the first
/// integral u' = sqrt(Phi(u)): x(u) = 1 - integral_u^1 dw / sqrt(Phi(w)),
/// integrated in sigma = log(u / u_lo). Normalized so that u(1) = 1.
inline Profile1D unique_increasing_profile(const ReactionTerm& beta, double u_lo, double u_hi,
                                           std::size_t n_samples) {
  if (!(u_lo > 0.0 && u_lo < 1.0)) throw InvalidParameter("unique_increasing_profile: u_lo must lie in (0,1)");
  if (!(u_hi >= 1.0)) throw InvalidParameter("unique_increasing_profile: u_hi must be at least 1");
  if (n_samples < 16) throw InvalidParameter("unique_increasing_profile: need at least 16 samples");
  const double phi_top = beta.primitive(1.0);
  if (!(beta.primitive(u_lo) > 0.0))
    throw NonIntegrableTail("unique_increasing_profile: Phi vanishes at u_lo; dx = du/sqrt(Phi) is not integrable");

  const std::size_t above = u_hi > 1.0 ? std::max<std::size_t>(2, n_samples / 4) : 0;
  const std::size_t below = n_samples - above;
  const double sigma_max = std::log(1.0 / u_lo);
  const double dsig = sigma_max / static_cast<double>(below - 1);

  auto integrand = [&](double sigma) {
    const double u = u_lo * std::exp(sigma);
    const double phi = beta.primitive(u);
    if (!(phi > 0.0)) throw NonIntegrableTail("unique_increasing_profile: Phi vanishes inside (u_lo, 1)");
    return u / std::sqrt(phi);
  };

  std::vector<double> sig(below), us(below), xs(below);
  for (std::size_t k = 0; k < below; ++k) {
    sig[k] = k + 1 == below ? sigma_max : dsig * static_cast<double>(k);
    us[k] = k + 1 == below ? 1.0 : u_lo * std::exp(sig[k]);
  }
  for (std::size_t k = 1; k < below; ++k)
    if (!(beta.primitive(us[k]) > beta.primitive(us[k - 1])))
      throw NonIntegrableTail(
          "unique_increasing_profile: Phi is not strictly increasing (beta vanishes inside (0,1))");
  xs[below - 1] = 1.0;
  for (std::size_t k = below - 1; k > 0; --k) {
    const double a = sig[k - 1], b = sig[k], mid = 0.5 * (a + b);
    const double panel = gauss5(integrand, a, mid) + gauss5(integrand, mid, b);
    xs[k - 1] = xs[k] - panel;
  }

  Profile1D p;
  p.xs = std::move(xs);
  p.us = std::move(us);
  p.dus.resize(p.us.size());
  for (std::size_t k = 0; k < p.us.size(); ++k) p.dus[k] = std::sqrt(beta.primitive(p.us[k]));
  const double top_slope = std::sqrt(phi_top);
  for (std::size_t k = 1; k <= above; ++k) {
    const double u = 1.0 + (u_hi - 1.0) * static_cast<double>(k) / static_cast<double>(above);
    p.us.push_back(u);
    p.xs.push_back(1.0 + (u - 1.0) / top_slope);
    p.dus.push_back(top_slope);
  }
  p.slope_plus = top_slope;
  p.slope_minus = 0.0;
  p.turning_point = -std::numeric_limits<double>::infinity();
  p.case_tag = ProfileCase::case_ii;
  p.finalize();
  return p;
}

struct Classification {
  ProfileCase tag = ProfileCase::unclassified;
  double a = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  double turning_point = std::numeric_limits<double>::quiet_NaN();
  double min_value = std::numeric_limits<double>::quiet_NaN();
  double constant = std::numeric_limits<double>::quiet_NaN();
  /// |a^2 - b^2 - 1| for case (i), |a^2 - (Phi(1) - Phi(y0))| for case (iii).
  double defect = 0.0;
  /// sup |u(p + d) - u(p - d)| for case (iii).
  double even_defect = 0.0;

  void apply_to(Profile1D& p) const {
    p.case_tag = tag;
    p.slope_plus = a;
    p.slope_minus = b;
    p.turning_point = turning_point;
    p.min_value = min_value;
  }
};

inline Profile1D mirrored(const Profile1D& p) {
  Profile1D m;
  const std::size_t n = p.size();
  m.xs.resize(n);
  m.us.resize(n);
  m.dus.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    m.xs[k] = -p.xs[n - 1 - k];
    m.us[k] = p.us[n - 1 - k];
    m.dus[k] = -p.dus[n - 1 - k];
  }
  m.finalize();
  return m;
}

/// Case tie-break: the exact value a = 1 is unstable under perturbation.
constexpr double case_ii_slope_tolerance = 1e-8;

inline Classification classify(const Profile1D& profile, const ReactionTerm& beta, double tol = 1e-3) {
  if (profile.size() < 20) throw InvalidParameter("classify: profile too short");
  Classification c;
  const auto [umin, umax] = std::minmax_element(profile.us.begin(), profile.us.end());
  double dmax = 0.0;
  for (double d : profile.dus) dmax = std::max(dmax, std::abs(d));
  if (dmax <= tol && *umax - *umin <= tol) {
    const double value = profile.us[profile.size() / 2];
    if (value > 0.0 && value < 1.0)
      throw InconclusiveClassification("classify: constant in (0,1) does not solve the equation");
    c.tag = ProfileCase::constant;
    c.constant = value;
    c.a = c.b = 0.0;
    return c;
  }

  const bool right_high = profile.us.back() >= 1.0 && profile.dus.back() > tol;
  const bool left_high = profile.us.front() >= 1.0 && profile.dus.front() < -tol;
  bool reflected = false;
  Profile1D work;
  const Profile1D* q = &profile;
  if (!right_high) {
    if (!left_high) throw InconclusiveClassification("classify: no tail reaches u >= 1; enlarge the domain");
    work = mirrored(profile);
    q = &work;
    reflected = true;
  }
  const Profile1D& p = *q;
  const std::size_t n = p.size();
  const std::size_t tail = std::max<std::size_t>(2, n / 10);

  auto spread = [&](std::size_t lo, std::size_t hi) {
    double mn = p.dus[lo], mx = p.dus[lo];
    for (std::size_t k = lo; k < hi; ++k) {
      mn = std::min(mn, p.dus[k]);
      mx = std::max(mx, p.dus[k]);
    }
    return mx - mn;
  };
  for (std::size_t k = n - tail; k < n; ++k)
    if (p.us[k] < 1.0) throw InconclusiveClassification("classify: right tail not inside {u >= 1}");
  if (spread(n - tail, n) > tol || spread(0, tail) > tol)
    throw InconclusiveClassification("classify: tails are not affine within tolerance");

  c.a = p.dus.back();
  const double left = p.dus.front();
  const double phi1 = beta.primitive(1.0);
  if (std::abs(c.a - 1.0) <= case_ii_slope_tolerance) {
    c.tag = ProfileCase::case_ii;
    c.b = std::abs(left);
    c.turning_point = -std::numeric_limits<double>::infinity();
    c.defect = c.b;
  } else if (c.a > 1.0) {
    if (!(left > tol)) throw InconclusiveClassification("classify: a > 1 but the left tail is not increasing");
    c.tag = ProfileCase::case_i;
    c.b = left;
    c.turning_point = -std::numeric_limits<double>::infinity();
    c.defect = std::abs(c.a * c.a - c.b * c.b - 1.0);
  } else {
    if (!(left < -tol)) throw InconclusiveClassification("classify: a < 1 but no turning point in the domain");
    c.tag = ProfileCase::case_iii;
    c.b = -left;
    std::size_t k = 0;
    while (k + 1 < n && !(p.dus[k] <= 0.0 && p.dus[k + 1] > 0.0)) ++k;
    if (k + 1 >= n) throw InconclusiveClassification("classify: turning point not bracketed");
    const HermiteCubic& curve = p.interpolant();
    double lo = p.xs[k], hi = p.xs[k + 1];
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (curve.derivative(mid) <= 0.0 ? lo : hi) = mid;
    }
    c.turning_point = 0.5 * (lo + hi);
    c.min_value = curve(c.turning_point);
    c.defect = std::abs(c.a * c.a - (phi1 - beta.primitive(c.min_value)));
    const double reach = 0.9 * std::min(c.turning_point - p.xs.front(), p.xs.back() - c.turning_point);
    for (int j = 1; j <= 400; ++j) {
      const double d = reach * j / 400.0;
      c.even_defect = std::max(c.even_defect, std::abs(curve(c.turning_point + d) - curve(c.turning_point - d)));
    }
  }
  if (reflected) {
    c.turning_point = -c.turning_point;
    if (c.tag == ProfileCase::case_i) c.tag = ProfileCase::reflected_i;
    else if (c.tag == ProfileCase::case_ii) c.tag = ProfileCase::reflected_ii;
    else if (c.tag == ProfileCase::case_iii) c.tag = ProfileCase::reflected_iii;
  }
  return c;
}

/// Embeds the profile along a direction of the (s, t) half-plane:
/// u(s, t) = profile(d_s s + d_t t). Only d = (0, +-1) gives a genuinely
/// one-dimensional function on R^n.
inline AxiField extend_to_nd(const Profile1D& profile, std::array<double, 2> direction, const AxiGrid& grid) {
  const double norm = std::hypot(direction[0], direction[1]);
  if (!(norm > 0.0)) throw InvalidParameter("extend_to_nd: direction must be nonzero");
  const double ds = direction[0] / norm, dt = direction[1] / norm;
  return AxiField::from_function(grid, [&](double s, double t) { return profile.eval(ds * s + dt * t); });
}

}  // namespace fblab
