#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fblab/axisym.hpp"
#include "fblab/common.hpp"
#include "fblab/field.hpp"

namespace fblab {

/// Profile curve tau -> (s(tau), t(tau)) of a surface of revolution, sampled
/// at uniform parameter spacing. Derivatives are optional; when absent they
/// are taken by finite differences.
struct Generator {
  std::vector<double> s, t;
  double dtau = 1.0;
  std::vector<double> ds, dt, d2s, d2t;  // analytic derivatives, or empty

  std::size_t size() const { return s.size(); }
  bool analytic() const { return !ds.empty(); }
};

/// Which side of the traversal direction holds {u > 0}. The outward normal
/// of {u > 0} points to the other side.
enum class PositiveSide { left, right };

/// Axisymmetric free boundary with outward normal nu of {u > 0}. Principal
/// curvatures are positive where the surface bends towards nu, so that
/// H = -div nu and u_nu_nu = -H on a one-phase free boundary.
struct RevolutionBoundary {
  int n = 3;
  std::vector<double> s, t;
  std::vector<double> nu_s, nu_t;
  std::vector<double> k_profile;   // curvature of the profile curve
  std::vector<double> k_rotation;  // rotational curvature, multiplicity n - 2
  std::vector<double> mean_curv;   // H = k_profile + (n-2) k_rotation
  std::vector<double> curv_sq;     // G^2 = k_profile^2 + (n-2) k_rotation^2
  std::vector<double> area_weight; // |S^{n-2}| s^{n-2} |dx/dtau| dtau, trapezoid
  std::size_t size() const { return s.size(); }
};

inline Generator cylinder_generator(double r, double t0, double t1, std::size_t m) {
  Generator g;
  g.dtau = (t1 - t0) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    g.s.push_back(r);
    g.t.push_back(t0 + g.dtau * static_cast<double>(k));
  }
  g.ds.assign(m, 0.0);
  g.dt.assign(m, 1.0);
  g.d2s.assign(m, 0.0);
  g.d2t.assign(m, 0.0);
  return g;
}

/// Sphere of radius r centered at the origin, traversed from the south pole
/// (tau = 0) to the north pole (tau = pi).
inline Generator sphere_generator(double r, std::size_t m, double tau0 = 0.0, double tau1 = pi) {
  Generator g;
  g.dtau = (tau1 - tau0) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = tau0 + g.dtau * static_cast<double>(k);
    g.s.push_back(k == 0 && tau0 == 0.0 ? 0.0 : (k + 1 == m && tau1 == pi ? 0.0 : r * std::sin(a)));
    g.t.push_back(-r * std::cos(a));
    g.ds.push_back(r * std::cos(a));
    g.dt.push_back(r * std::sin(a));
    g.d2s.push_back(-r * std::sin(a));
    g.d2t.push_back(r * std::cos(a));
  }
  return g;
}

/// Catenoid s = c cosh(t / c), sampled only (derivatives by differences).
inline Generator catenoid_generator(double c, double t0, double t1, std::size_t m) {
  Generator g;
  g.dtau = (t1 - t0) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = t0 + g.dtau * static_cast<double>(k);
    g.t.push_back(t);
    g.s.push_back(c * std::cosh(t / c));
  }
  return g;
}

namespace detail {
inline std::vector<double> diff1(const std::vector<double>& f, double h) {
  const std::size_t m = f.size();
  std::vector<double> d(m);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[m - 1] = (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h);
  return d;
}
inline std::vector<double> diff2(const std::vector<double>& f, double h) {
  const std::size_t m = f.size();
  std::vector<double> d(m);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h);
  if (m >= 4) {
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
    d[m - 1] = (2.0 * f[m - 1] - 5.0 * f[m - 2] + 4.0 * f[m - 3] - f[m - 4]) / (h * h);
  } else {
    d[0] = d[1];
    d[m - 1] = d[m - 2];
  }
  return d;
}
}  // namespace detail

inline RevolutionBoundary curvature_of_revolution(const Generator& gen, int n,
                                                  PositiveSide side = PositiveSide::right) {
  const std::size_t m = gen.size();
  if (m < 4 || gen.t.size() != m) throw InvalidParameter("curvature_of_revolution: need at least four samples");
  if (n < 2) throw InvalidParameter("curvature_of_revolution: n must be at least 2");
  const auto ds = gen.analytic() ? gen.ds : detail::diff1(gen.s, gen.dtau);
  const auto dt = gen.analytic() ? gen.dt : detail::diff1(gen.t, gen.dtau);
  const auto d2s = gen.analytic() ? gen.d2s : detail::diff2(gen.s, gen.dtau);
  const auto d2t = gen.analytic() ? gen.d2t : detail::diff2(gen.t, gen.dtau);

  double scale = 0.0;
  for (std::size_t k = 0; k < m; ++k) scale = std::max({scale, std::abs(gen.s[k]), std::abs(gen.t[k])});
  const double axis_tol = 1e-12 * (1.0 + scale);
  const double c = unit_sphere_area(n - 2);
  const double sign = side == PositiveSide::right ? 1.0 : -1.0;

  RevolutionBoundary b;
  b.n = n;
  b.s = gen.s;
  b.t = gen.t;
  for (std::size_t k = 0; k < m; ++k) {
    const double speed = std::hypot(ds[k], dt[k]);
    if (!(speed > 0.0)) throw CurvatureSingularity("curvature_of_revolution: degenerate tangent");
    const double nls = -dt[k] / speed, nlt = ds[k] / speed;  // left normal
    const double ns = sign * nls, nt = sign * nlt;
    const double kappa = (ds[k] * d2t[k] - dt[k] * d2s[k]) / (speed * speed * speed);
    const double k1 = kappa * sign;
    double kr;
    if (std::abs(gen.s[k]) <= axis_tol) {
      if (std::abs(dt[k] / speed) > 1e-6)
        throw CurvatureSingularity("curvature_of_revolution: generator meets the axis at a cone point");
      kr = k1;
    } else {
      kr = -ns / gen.s[k];
    }
    b.nu_s.push_back(ns);
    b.nu_t.push_back(nt);
    b.k_profile.push_back(k1);
    b.k_rotation.push_back(kr);
    b.mean_curv.push_back(k1 + (n - 2) * kr);
    b.curv_sq.push_back(k1 * k1 + (n - 2) * kr * kr);
    const double trap = (k == 0 || k + 1 == m) ? 0.5 : 1.0;
    b.area_weight.push_back(trap * c * std::pow(std::abs(gen.s[k]), n - 2) * speed * gen.dtau);
  }
  return b;
}

/// Level function of a prescribed positivity set: {phi > 0} = {u > 0}.
using LevelFunction = std::function<double(double, double)>;

struct HarmonicSolve {
  AxiField field;
  double residual = 0.0;  // sup of the assembled linear residual
  std::size_t unknowns = 0;
};

/// Harmonic function in {phi > 0} vanishing on {phi = 0}, with outer
/// Dirichlet data from the boundary model. Nodes next to the interface use
/// Shortley-Weller stencils with the crossing located by bisection on phi.
inline HarmonicSolve solve_prescribed_boundary(const AxiGrid& grid, const LevelFunction& phi,
                                               const BoundaryModel& data) {
  grid.validate();
  const double hs = grid.hs(), ht = grid.ht();
  const int n = grid.n;
  std::vector<int> id(grid.size(), -1);
  int N = 0;
  for (std::size_t i = 0; i < grid.ns; ++i)
    for (std::size_t j = 0; j < grid.nt; ++j)
      if (!grid.is_dirichlet(i, j) && phi(grid.s(i), grid.t(j)) > 0.0) id[grid.index(i, j)] = N++;

  auto crossing = [&](double s0, double t0, double s1, double t1) {
    // phi(s0,t0) > 0 >= phi(s1,t1); returns the fraction of the way.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(s0 + mid * (s1 - s0), t0 + mid * (t1 - t0)) > 0.0 ? lo : hi) = mid;
    }
    return std::max(0.5 * (lo + hi), 1e-12);
  };

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  auto value_known = [&](std::size_t i, std::size_t j, double& v) {
    // Outer Dirichlet node: known value (zero outside the positivity set).
    if (!grid.is_dirichlet(i, j)) return false;
    v = phi(grid.s(i), grid.t(j)) > 0.0 ? data(grid.s(i), grid.t(j)) : 0.0;
    return true;
  };

  for (std::size_t i = 0; i + 1 < grid.ns; ++i) {
    for (std::size_t j = 1; j + 1 < grid.nt; ++j) {
      const int row = id[grid.index(i, j)];
      if (row < 0) continue;
      const double s = grid.s(i), t = grid.t(j);
      double diag = 0.0;
      // One direction of a three-point stencil: couples with the neighbour
      // at distance h (inside) or with the interface value 0 at theta h.
      struct Arm {
        double h;
        int col;
        double known;
      };
      auto arm = [&](std::size_t ii, std::size_t jj, double h) -> Arm {
        const double sn = grid.s(ii), tn = grid.t(jj);
        if (phi(sn, tn) > 0.0) {
          double v = 0.0;
          if (value_known(ii, jj, v)) return {h, -1, v};
          return {h, id[grid.index(ii, jj)], 0.0};
        }
        return {crossing(s, t, sn, tn) * h, -1, 0.0};
      };
      auto couple = [&](const Arm& a, double coef) {
        if (a.col >= 0) trip.emplace_back(row, a.col, coef);
        else rhs[row] -= coef * a.known;
      };
      // t direction
      {
        const Arm up = arm(i, j + 1, ht), dn = arm(i, j - 1, ht);
        const double hp = up.h, hm = dn.h;
        couple(up, 2.0 / (hp * (hp + hm)));
        couple(dn, 2.0 / (hm * (hp + hm)));
        diag -= 2.0 / (hp * hm);
      }
      // s direction
      if (i == 0) {
        const Arm out = arm(1, j, hs);
        couple(out, 2.0 * (n - 1) / (out.h * out.h));
        diag -= 2.0 * (n - 1) / (out.h * out.h);
      } else {
        const Arm out = arm(i + 1, j, hs), in = arm(i - 1, j, hs);
        const double hp = out.h, hm = in.h;
        const double k = (n - 2) / s;
        // u_ss + k u_s on a nonuniform three-point stencil.
        const double cp = 2.0 / (hp * (hp + hm)) + k * hm / (hp * (hp + hm));
        const double cm = 2.0 / (hm * (hp + hm)) - k * hp / (hm * (hp + hm));
        couple(out, cp);
        couple(in, cm);
        diag -= cp + cm;
      }
      trip.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error("solve_prescribed_boundary: factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);

  HarmonicSolve out;
  out.unknowns = static_cast<std::size_t>(N);
  out.residual = (A * x - rhs).lpNorm<Eigen::Infinity>();
  out.field = AxiField(grid, 0.0);
  for (std::size_t i = 0; i < grid.ns; ++i)
    for (std::size_t j = 0; j < grid.nt; ++j) {
      const int k = id[grid.index(i, j)];
      double v = 0.0;
      if (k >= 0) out.field(i, j) = x[k];
      else if (value_known(i, j, v)) out.field(i, j) = v;
    }
  return out;
}

/// Sup of the regular five-point harmonic residual over nodes whose stencil
/// lies in {u > 0}.
inline double harmonic_residual(const AxiField& u) {
  const AxiGrid& g = u.grid;
  double r = 0.0;
  for (std::size_t i = 0; i + 1 < g.ns; ++i)
    for (std::size_t j = 1; j + 1 < g.nt; ++j) {
      if (!(u(i, j) > 0.0 && u(i + 1, j) > 0.0 && u(i, j + 1) > 0.0 && u(i, j - 1) > 0.0)) continue;
      if (i > 0 && !(u(i - 1, j) > 0.0)) continue;
      r = std::max(r, std::abs(laplacian_at(u, i, j)));
    }
  return r;
}

struct OnePhaseForm {
  double lhs = 0.0;  // boundary integral of H xi^2
  double rhs = 0.0;  // integral over {u > 0} of |grad xi|^2
  bool unstable() const { return lhs > rhs; }
  double defect() const { return rhs - lhs; }
};

inline void check_boundary_matches(const RevolutionBoundary& b, const AxiField& u) {
  const double h = std::max(u.grid.hs(), u.grid.ht());
  const double tol = h * std::max(1.0, lipschitz_monitor(u));
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!u.contains(b.s[k], b.t[k])) continue;
    if (std::abs(u.sample(b.s[k], b.t[k])) > tol)
      throw GeometryMismatch("boundary sample is not within one cell of the zero level set of u");
  }
}

/// Fraction of the cell [i,i+1]x[j,j+1] where the bilinear interpolant of u
/// is positive (8x8 midpoint subsampling; exact for cells of one sign).
inline double positive_fraction(const AxiField& u, std::size_t i, std::size_t j) {
  const double a = u(i, j), b = u(i + 1, j), c = u(i, j + 1), d = u(i + 1, j + 1);
  if (a > 0 && b > 0 && c > 0 && d > 0) return 1.0;
  if (a <= 0 && b <= 0 && c <= 0 && d <= 0) return 0.0;
  constexpr int m = 8;
  int count = 0;
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      const double x = (p + 0.5) / m, y = (q + 0.5) / m;
      const double v = (1 - x) * (1 - y) * a + x * (1 - y) * b + (1 - x) * y * c + x * y * d;
      count += v > 0.0;
    }
  return static_cast<double>(count) / (m * m);
}

/// Both sides of the one-phase stability inequality
/// integral over the free boundary of H xi^2 <= integral over {u > 0} of |grad xi|^2.
inline OnePhaseForm onephase_stability_form(const RevolutionBoundary& b, const AxiField& u, const AxiField& xi,
                                            std::optional<double> harmonic_tol = 1e-6) {
  require_same_grid(u, xi, "onephase_stability_form");
  if (b.n != u.grid.n) throw InvalidParameter("onephase_stability_form: dimension mismatch");
  if (harmonic_tol) {
    const double r = harmonic_residual(u);
    if (r > *harmonic_tol)
      throw PreconditionViolation("onephase_stability_form: u is not harmonic in {u > 0} (residual " +
                                  std::to_string(r) + ")");
  }
  check_boundary_matches(b, u);
  OnePhaseForm f;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!xi.contains(b.s[k], b.t[k])) continue;
    f.lhs += b.area_weight[k] * b.mean_curv[k] * sqr(xi.sample(b.s[k], b.t[k]));
  }
  const AxiGrid& g = u.grid;
  const double hs = g.hs(), ht = g.ht();
  const double area = unit_sphere_area(g.n - 2);
  f.rhs = ordered_row_sum(g.ns - 1, [&](std::size_t i) {
    const double w = area * std::pow(g.s(i) + 0.5 * hs, g.n - 2) * hs * ht;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < g.nt; ++j) {
      const double frac = positive_fraction(u, i, j);
      if (frac == 0.0) continue;
      const double xs = 0.5 * ((xi(i + 1, j) - xi(i, j)) + (xi(i + 1, j + 1) - xi(i, j + 1))) / hs;
      const double xt = 0.5 * ((xi(i, j + 1) - xi(i, j)) + (xi(i + 1, j + 1) - xi(i + 1, j))) / ht;
      acc += w * frac * (xs * xs + xt * xt);
    }
    return acc;
  });
  return f;
}

/// Node derivative fields by centered differences (axis via the even ghost).
struct DerivativeFields {
  AxiField us, ut, uss, ust, utt;
};

inline DerivativeFields derivative_fields(const AxiField& u) {
  const AxiGrid& g = u.grid;
  const double hs = g.hs(), ht = g.ht();
  DerivativeFields d{AxiField(g), AxiField(g), AxiField(g), AxiField(g), AxiField(g)};
  auto at = [&](long i, std::size_t j) {
    // Even reflection across the axis.
    return u(static_cast<std::size_t>(i < 0 ? -i : i), j);
  };
  for (std::size_t i = 0; i + 1 < g.ns; ++i)
    for (std::size_t j = 1; j + 1 < g.nt; ++j) {
      const long ii = static_cast<long>(i);
      d.us(i, j) = (at(ii + 1, j) - at(ii - 1, j)) / (2.0 * hs);
      d.ut(i, j) = (u(i, j + 1) - u(i, j - 1)) / (2.0 * ht);
      d.uss(i, j) = (at(ii + 1, j) - 2.0 * u(i, j) + at(ii - 1, j)) / (hs * hs);
      d.utt(i, j) = (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (ht * ht);
      d.ust(i, j) = (at(ii + 1, j + 1) - at(ii + 1, j - 1) - at(ii - 1, j + 1) + at(ii - 1, j - 1)) / (4.0 * hs * ht);
    }
  return d;
}

struct ClaimHReport {
  double sup_defect = 0.0;
  double gradient_defect = 0.0;  // max | |grad u| - 1 | at the boundary
  bool gradient_warning = false; // gradient defect above 1e-3
  std::vector<double> normal_derivative;  // grad(u_s) . nu per used sample
  std::vector<double> curvature_term;     // H u_s per used sample
  std::vector<std::size_t> used;          // boundary sample indices evaluated
};

/// Evaluates grad(u_s) . nu - H u_s along the free boundary. Values at a
/// boundary point come from quadratic extrapolation of interpolated node
/// derivatives at three points 3h, 4.5h and 6h inside {u > 0} along -nu.
inline ClaimHReport check_claimH(const RevolutionBoundary& b, const AxiField& u) {
  const AxiGrid& g = u.grid;
  const DerivativeFields d = derivative_fields(u);
  const double h = std::max(g.hs(), g.ht());
  auto node_ok = [&](std::size_t i, std::size_t j) {
    if (i + 1 >= g.ns || j == 0 || j + 1 >= g.nt) return false;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const long ii = std::abs(static_cast<long>(i) + di);
        if (!(u(static_cast<std::size_t>(ii), j + dj) > 0.0)) return false;
      }
    return true;
  };
  auto cell_ok = [&](double s, double t) {
    if (!u.contains(s, t) || s < 0.0) return false;
    const auto i = static_cast<std::size_t>(std::min(s / g.hs(), static_cast<double>(g.ns - 2)));
    const auto j = static_cast<std::size_t>(std::min((t - g.t_min) / g.ht(), static_cast<double>(g.nt - 2)));
    return node_ok(i, j) && node_ok(i + 1, j) && node_ok(i, j + 1) && node_ok(i + 1, j + 1);
  };
  ClaimHReport rep;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double ps = b.s[k], pt = b.t[k], ns = b.nu_s[k], nt = b.nu_t[k];
    // Quadratic extrapolation from q_m = p - (3 + 1.5 m) h nu, m = 0, 1, 2.
    double qs[3], qt[3];
    bool ok = true;
    for (int m = 0; m < 3; ++m) {
      qs[m] = ps - (3.0 + 1.5 * m) * h * ns;
      qt[m] = pt - (3.0 + 1.5 * m) * h * nt;
      ok = ok && cell_ok(std::abs(qs[m]), qt[m]);
    }
    if (!ok) continue;
    auto extrap = [&](const AxiField& f, double sign_s) {
      // s-odd fields flip sign under reflection across the axis.
      double v[3];
      for (int m = 0; m < 3; ++m) v[m] = f.sample(std::abs(qs[m]), qt[m]) * (qs[m] < 0 ? sign_s : 1.0);
      return 6.0 * v[0] - 8.0 * v[1] + 3.0 * v[2];
    };
    const double us = extrap(d.us, -1.0), ut = extrap(d.ut, 1.0);
    const double uss = extrap(d.uss, 1.0), ust = extrap(d.ust, -1.0);
    rep.gradient_defect = std::max(rep.gradient_defect, std::abs(std::hypot(us, ut) - 1.0));
    const double lhs = uss * ns + ust * nt;
    const double rhs = b.mean_curv[k] * us;
    rep.normal_derivative.push_back(lhs);
    rep.curvature_term.push_back(rhs);
    rep.used.push_back(k);
    rep.sup_defect = std::max(rep.sup_defect, std::abs(lhs - rhs));
  }
  if (rep.used.empty()) throw GeometryMismatch("check_claimH: no boundary sample has an interior stencil");
  if (rep.gradient_defect > 1e-2)
    throw PreconditionViolation("check_claimH: |grad u| = 1 fails on the boundary (defect " +
                                std::to_string(rep.gradient_defect) + ")");
  rep.gradient_warning = rep.gradient_defect > 1e-3;
  return rep;
}

struct IdentityCheck {
  AxiField defect;
  double sup = 0.0;
};

/// (1/2) d_s |grad u|^2 - grad u . d_s grad u at nodes two cells away from the
/// axis and the outer boundary; zero up to O(h^2) for smooth u.
inline IdentityCheck gradient_magnitude_identity(const AxiField& u) {
  const AxiGrid& g = u.grid;
  const DerivativeFields d = derivative_fields(u);
  const double hs = g.hs();
  IdentityCheck out{AxiField(g, 0.0), 0.0};
  for (std::size_t i = 2; i + 3 < g.ns; ++i)
    for (std::size_t j = 2; j + 2 < g.nt; ++j) {
      auto gsq = [&](std::size_t ii) { return sqr(d.us(ii, j)) + sqr(d.ut(ii, j)); };
      const double left = 0.25 * (gsq(i + 1) - gsq(i - 1)) / hs;
      const double right = d.us(i, j) * d.uss(i, j) + d.ut(i, j) * d.ust(i, j);
      out.defect(i, j) = left - right;
      out.sup = std::max(out.sup, std::abs(left - right));
    }
  return out;
}

}  // namespace fblab
