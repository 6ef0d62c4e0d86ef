#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fblab/common.hpp"
#include "fblab/field.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

/// Discrete u_ss + (n-2)/s u_s + u_tt at node (i, j), i < ns-1, 0 < j < nt-1.
/// On the axis the ghost value u(-hs, t) = u(hs, t) turns the singular term
/// into its limit (n-2) u_ss, so the s-part is (n-1) u_ss.
inline double laplacian_at(const AxiField& u, std::size_t i, std::size_t j) {
  const AxiGrid& g = u.grid;
  const double hs = g.hs(), ht = g.ht();
  const double c = u(i, j);
  const double tt = (u(i, j + 1) - 2.0 * c + u(i, j - 1)) / (ht * ht);
  if (i == 0) return (g.n - 1) * 2.0 * (u(1, j) - c) / (hs * hs) + tt;
  const double ss = (u(i + 1, j) - 2.0 * c + u(i - 1, j)) / (hs * hs);
  const double s1 = (u(i + 1, j) - u(i - 1, j)) / (2.0 * hs);
  return ss + (g.n - 2) / g.s(i) * s1 + tt;
}

/// Applies the axisymmetric Laplacian at every non-Dirichlet node; Dirichlet
/// nodes of the result are zero.
inline AxiField apply_axisym_laplacian(const AxiField& u) {
  const AxiGrid& g = u.grid;
  g.validate();
  AxiField out(g, 0.0);
  parallel_rows(g.ns - 1, [&](std::size_t i) {
    for (std::size_t j = 1; j + 1 < g.nt; ++j) out(i, j) = laplacian_at(u, i, j);
  });
  return out;
}

/// Thrown when damped Newton stalls; carries the last iterate.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, AxiField last, double residual)
      : Error(what), last_iterate(std::move(last)), last_residual(residual) {}
  AxiField last_iterate;
  double last_residual;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_newton = 100;
  int max_backtracks = 50;
  double armijo = 1e-4;
  /// Interior starting values; the boundary model is used when empty.
  std::optional<AxiField> initial;
};

struct SolveResult {
  AxiField field;
  double residual = 0.0;  // sup-norm of Delta_h u - beta(u)/2 on unknown nodes
  int iterations = 0;
  std::vector<double> residual_history;  // 2-norm after each accepted step
};

using BoundaryModel = std::function<double(double, double)>;

inline double semilinear_residual_sup(const AxiField& u, const ReactionTerm& beta) {
  const AxiGrid& g = u.grid;
  double r = 0.0;
  for (std::size_t i = 0; i + 1 < g.ns; ++i)
    for (std::size_t j = 1; j + 1 < g.nt; ++j)
      r = std::max(r, std::abs(laplacian_at(u, i, j) - 0.5 * beta.eval(u(i, j))));
  return r;
}

/// Damped Newton for Delta_h u = beta(u)/2 with Dirichlet data from the
/// boundary model on s = s_max and on both t caps. Jacobian
/// Delta_h - beta'(u)/2, halving backtracking with an Armijo test on the
/// residual 2-norm.
inline SolveResult solve_semilinear(const ReactionTerm& beta, const AxiGrid& grid,
                                    const BoundaryModel& boundary, const SolveOptions& opt = {}) {
  grid.validate();
  if (!(opt.tol > 0.0)) throw InvalidParameter("solve_semilinear: tol must be positive");
  AxiField u = opt.initial ? *opt.initial : AxiField::from_function(grid, boundary);
  if (!u.grid.same_as(grid)) throw InvalidParameter("solve_semilinear: initial guess on a different grid");
  for (std::size_t i = 0; i < grid.ns; ++i)
    for (std::size_t j = 0; j < grid.nt; ++j)
      if (grid.is_dirichlet(i, j)) u(i, j) = boundary(grid.s(i), grid.t(j));

  // Unknown numbering: nodes with i < ns-1 and 0 < j < nt-1.
  const std::size_t ni = grid.ns - 1, nj = grid.nt - 2;
  const auto id = [nj](std::size_t i, std::size_t j) { return static_cast<int>(i * nj + (j - 1)); };
  const int N = static_cast<int>(ni * nj);
  const double hs = grid.hs(), ht = grid.ht();
  const int n = grid.n;

  auto residual = [&](const AxiField& w, Eigen::VectorXd& r) {
    r.resize(N);
    parallel_rows(ni, [&](std::size_t i) {
      for (std::size_t j = 1; j + 1 < grid.nt; ++j)
        r[id(i, j)] = laplacian_at(w, i, j) - 0.5 * beta.eval(w(i, j));
    });
  };

  Eigen::VectorXd r;
  residual(u, r);
  SolveResult out;
  double norm2 = r.norm();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  for (int it = 0; it < opt.max_newton; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= opt.tol) break;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * 5);
    for (std::size_t i = 0; i < ni; ++i) {
      for (std::size_t j = 1; j + 1 < grid.nt; ++j) {
        const int row = id(i, j);
        auto add = [&](std::size_t ii, std::size_t jj, double v) {
          if (!grid.is_dirichlet(ii, jj)) trip.emplace_back(row, id(ii, jj), v);
        };
        double diag = -2.0 / (ht * ht) - 0.5 * beta.deriv(u(i, j));
        add(i, j + 1, 1.0 / (ht * ht));
        add(i, j - 1, 1.0 / (ht * ht));
        if (i == 0) {
          diag += -2.0 * (n - 1) / (hs * hs);
          add(1, j, 2.0 * (n - 1) / (hs * hs));
        } else {
          const double adv = (n - 2) / grid.s(i) / (2.0 * hs);
          diag += -2.0 / (hs * hs);
          add(i + 1, j, 1.0 / (hs * hs) + adv);
          add(i - 1, j, 1.0 / (hs * hs) - adv);
        }
        trip.emplace_back(row, row, diag);
      }
    }
    Eigen::SparseMatrix<double> J(N, N);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw NonConvergence("solve_semilinear: singular Newton Jacobian", u, r.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd delta = lu.solve(-r);

    double lambda = 1.0;
    bool accepted = false;
    AxiField trial = u;
    Eigen::VectorXd rt;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 1; j + 1 < grid.nt; ++j) trial(i, j) = u(i, j) + lambda * delta[id(i, j)];
      residual(trial, rt);
      const double tn = rt.norm();
      if (tn <= (1.0 - opt.armijo * lambda) * norm2) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      // A stalled step at round-off level is convergence, not failure.
      if (r.lpNorm<Eigen::Infinity>() <= 10.0 * opt.tol) break;
      throw NonConvergence("solve_semilinear: no residual decrease after backtracking", u,
                           r.lpNorm<Eigen::Infinity>());
    }
    u = std::move(trial);
    r = std::move(rt);
    norm2 = r.norm();
    out.residual_history.push_back(norm2);
    out.iterations = it + 1;
  }
  out.residual = r.lpNorm<Eigen::Infinity>();
  if (out.residual > opt.tol)
    throw NonConvergence("solve_semilinear: Newton iteration limit reached", u, out.residual);
  out.field = std::move(u);
  return out;
}

/// True when the maximum of u is attained on the Dirichlet boundary (within
/// slack). Subsolutions of the Laplacian (beta >= 0) must pass.
inline bool max_on_boundary(const AxiField& u, double slack = 1e-12) {
  const AxiGrid& g = u.grid;
  double inner = -std::numeric_limits<double>::infinity();
  double outer = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.ns; ++i)
    for (std::size_t j = 0; j < g.nt; ++j) {
      double& slot = g.is_dirichlet(i, j) ? outer : inner;
      slot = std::max(slot, u(i, j));
    }
  return inner <= outer + slack;
}

/// Solves on the grid and on a grid enlarged by half its node count on each
/// free side (same spacing), and returns the sup difference on common nodes.
/// The enlarged solve is warm-started from the first solution.
inline double truncation_influence(const ReactionTerm& beta, const AxiGrid& grid, const BoundaryModel& boundary,
                                   const SolveOptions& opt = {}) {
  const auto small = solve_semilinear(beta, grid, boundary, opt);
  AxiGrid big = grid;
  const std::size_t qs = (grid.ns - 1) / 2, qt = (grid.nt - 1) / 2;
  big.ns = grid.ns + qs;
  big.s_max = grid.s_max + static_cast<double>(qs) * grid.hs();
  big.nt = grid.nt + 2 * qt;
  big.t_min = grid.t_min - static_cast<double>(qt) * grid.ht();
  big.t_max = grid.t_max + static_cast<double>(qt) * grid.ht();
  // Start from the boundary model, overwritten by the small solution where
  // the grids overlap.
  AxiField start = AxiField::from_function(big, boundary);
  for (std::size_t i = 0; i + 1 < grid.ns; ++i)
    for (std::size_t j = 1; j + 1 < grid.nt; ++j) start(i, j + qt) = small.field(i, j);
  SolveOptions o2 = opt;
  o2.initial = std::move(start);
  const auto large = solve_semilinear(beta, big, boundary, o2);
  double d = 0.0;
  for (std::size_t i = 0; i < grid.ns; ++i)
    for (std::size_t j = 0; j < grid.nt; ++j) d = std::max(d, std::abs(small.field(i, j) - large.field(i, j + qt)));
  return d;
}

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double potential = 0.0;
  double total = 0.0;
  bool measure_weight = false;
};

struct OnePhasePotential {};
struct SmoothedPotential {
  const ReactionTerm* beta = nullptr;
  std::optional<double> epsilon;
};
using Potential = std::variant<OnePhasePotential, SmoothedPotential>;

/// Midpoint rule per grid cell for integral |grad u|^2 + Phi_eps(u) (or the
/// indicator of {u > 0} for the one-phase energy). With the weight flag the
/// cell measure is |S^{n-2}| s^{n-2} ds dt, i.e. the integral over R^n.
inline EnergyBreakdown energy(const AxiField& u, const Potential& pot, bool weighted) {
  const AxiGrid& g = u.grid;
  const double hs = g.hs(), ht = g.ht();
  const bool one_phase = std::holds_alternative<OnePhasePotential>(pot);
  const ReactionTerm* beta = nullptr;
  double eps = 1.0;
  if (!one_phase) {
    const auto& sp = std::get<SmoothedPotential>(pot);
    if (!sp.beta) throw InvalidParameter("energy: reaction term missing");
    if (!sp.epsilon) throw InvalidParameter("energy: epsilon required for the smoothed energy");
    if (!(*sp.epsilon > 0.0)) throw InvalidParameter("energy: epsilon must be positive");
    beta = sp.beta;
    eps = *sp.epsilon;
  }
  const double area = unit_sphere_area(g.n - 2);
  std::vector<double> dir(g.ns - 1), potv(g.ns - 1);
  parallel_rows(g.ns - 1, [&](std::size_t i) {
    const double sc = g.s(i) + 0.5 * hs;
    const double w = weighted ? area * std::pow(sc, g.n - 2) * hs * ht : hs * ht;
    double d = 0.0, p = 0.0;
    for (std::size_t j = 0; j + 1 < g.nt; ++j) {
      const double us = 0.5 * ((u(i + 1, j) - u(i, j)) + (u(i + 1, j + 1) - u(i, j + 1))) / hs;
      const double ut = 0.5 * ((u(i, j + 1) - u(i, j)) + (u(i + 1, j + 1) - u(i + 1, j))) / ht;
      const double mean = 0.25 * (u(i, j) + u(i + 1, j) + u(i, j + 1) + u(i + 1, j + 1));
      d += w * (us * us + ut * ut);
      p += w * (one_phase ? (mean > 0.0 ? 1.0 : 0.0) : beta->primitive(mean / eps));
    }
    dir[i] = d;
    potv[i] = p;
  });
  EnergyBreakdown e;
  for (std::size_t i = 0; i + 1 < g.ns; ++i) {
    e.dirichlet += dir[i];
    e.potential += potv[i];
  }
  e.total = e.dirichlet + e.potential;
  e.measure_weight = weighted;
  return e;
}

struct BlowDown {
  AxiField field;
  /// sup |Delta_h u_eps - beta_eps(u_eps)/2| over interior nodes; NaN when no
  /// reaction term was supplied.
  double residual = std::numeric_limits<double>::quiet_NaN();
};

/// u_eps(x) = eps u(x / eps) resampled on the target grid by bilinear
/// interpolation. eps = 1 on a matching grid returns an exact copy.
inline BlowDown blow_down(const AxiField& u, double eps, const AxiGrid& target,
                          const ReactionTerm* beta = nullptr) {
  if (!(eps > 0.0)) throw InvalidParameter("blow_down: epsilon must be positive");
  target.validate();
  BlowDown out;
  if (eps == 1.0 && target.same_as(u.grid)) {
    out.field = u;
  } else {
    out.field = AxiField(target);
    for (std::size_t i = 0; i < target.ns; ++i)
      for (std::size_t j = 0; j < target.nt; ++j) {
        const double s = target.s(i) / eps, t = target.t(j) / eps;
        if (!u.contains(s, t)) throw DomainError("blow_down: target grid reaches outside the rescaled source domain");
        out.field(i, j) = eps * u.sample(s, t);
      }
  }
  if (beta) {
    const auto scaled = rescale(*beta, eps);
    double r = 0.0;
    for (std::size_t i = 0; i + 1 < target.ns; ++i)
      for (std::size_t j = 1; j + 1 < target.nt; ++j)
        r = std::max(r, std::abs(laplacian_at(out.field, i, j) - 0.5 * scaled.eval(out.field(i, j))));
    out.residual = r;
  }
  return out;
}

/// Largest centered-difference gradient magnitude over non-Dirichlet nodes.
inline double lipschitz_monitor(const AxiField& u) {
  const AxiGrid& g = u.grid;
  const double hs = g.hs(), ht = g.ht();
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < g.ns; ++i)
    for (std::size_t j = 1; j + 1 < g.nt; ++j) {
      const double us = i == 0 ? 0.0 : (u(i + 1, j) - u(i - 1, j)) / (2.0 * hs);
      const double ut = (u(i, j + 1) - u(i, j - 1)) / (2.0 * ht);
      m = std::max(m, std::hypot(us, ut));
    }
  return m;
}

}  // namespace fblab
