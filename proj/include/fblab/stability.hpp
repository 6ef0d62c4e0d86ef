#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fblab/axisym.hpp"
#include "fblab/common.hpp"
#include "fblab/field.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

enum class Verdict { stable_on_grid, unstable_direction_found, inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::stable_on_grid: return "stable-on-grid";
    case Verdict::unstable_direction_found: return "unstable-direction-found";
    default: return "inconclusive";
  }
}

enum class CutoffProfile {
  quintic_ball,     // 1 on B_R, 0 outside B_2R, quintic smoothstep in between
  boundary_collar,  // 1 except a collar along the Dirichlet boundary
};

struct StabilityProbe {
  double alpha = 0.0;
  double R = 2.0;
  double eps_inner = 0.5;
  double eps0 = 0.1;
  CutoffProfile cutoff = CutoffProfile::quintic_ball;
  double collar_width = 1.0;  // boundary_collar only

  void validate() const {
    if (!(alpha >= 0.0)) throw InvalidParameter("probe: alpha must be non-negative");
    if (!(eps_inner > 0.0 && eps_inner < 1.0)) throw InvalidParameter("probe: need 0 < eps_inner < 1");
    if (!(R > 1.0)) throw InvalidParameter("probe: need R > 1");
    if (!(eps0 > 0.0)) throw InvalidParameter("probe: eps0 must be positive");
    if (cutoff == CutoffProfile::boundary_collar && !(collar_width > 0.0))
      throw InvalidParameter("probe: collar width must be positive");
  }
};

struct SpectralReport {
  Verdict verdict = Verdict::inconclusive;
  double rayleigh_min = std::numeric_limits<double>::quiet_NaN();
  AxiField eigenvector;
  int iterations = 0;
  double form_lhs = 0.0;
  double form_rhs = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();  // ||(L - lambda) xi|| / ||xi||
  bool certified = false;  // LDLT inertia confirms lambda_min > -tol
  bool alpha_integrable = true;
  bool exploratory = false;  // n >= 6: outside the dimension window, verdicts are exploratory
  StabilityProbe probe;
  double defect() const { return form_rhs - form_lhs; }
};

/// Second variation discretized on the non-Dirichlet nodes: K is the
/// symmetric stiffness of integral |grad xi|^2 + beta'(u)/2 xi^2 and M the
/// diagonal lumped mass of the measure |S^{n-2}| s^{n-2} ds dt.
struct SecondVariation {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd M;
  AxiGrid grid;

  std::size_t unknowns() const { return static_cast<std::size_t>(M.size()); }
  int id(std::size_t i, std::size_t j) const { return static_cast<int>(i * (grid.nt - 2) + (j - 1)); }

  Eigen::VectorXd pack(const AxiField& f) const {
    Eigen::VectorXd x(M.size());
    for (std::size_t i = 0; i + 1 < grid.ns; ++i)
      for (std::size_t j = 1; j + 1 < grid.nt; ++j) x[id(i, j)] = f(i, j);
    return x;
  }
  AxiField unpack(const Eigen::VectorXd& x) const {
    AxiField f(grid, 0.0);
    for (std::size_t i = 0; i + 1 < grid.ns; ++i)
      for (std::size_t j = 1; j + 1 < grid.nt; ++j) f(i, j) = x[id(i, j)];
    return f;
  }
};

namespace detail {
// Edge weights of the stiffness: s-edge (i, i+1) and t-edge (j, j+1) in column i.
inline double s_edge_weight(const AxiGrid& g, std::size_t i) {
  const double sm = g.s(i) + 0.5 * g.hs();
  return unit_sphere_area(g.n - 2) * std::pow(sm, g.n - 2) * g.ht() / g.hs();
}
inline double t_edge_weight(const AxiGrid& g, std::size_t i) { return column_weight(g, i) / g.ht(); }
inline double node_mass(const AxiGrid& g, std::size_t i) { return column_weight(g, i) * g.ht(); }
}  // namespace detail

inline SecondVariation assemble_second_variation(const AxiField& u, const ReactionTerm& beta) {
  const AxiGrid& g = u.grid;
  g.validate();
  SecondVariation sv;
  sv.grid = g;
  const std::size_t N = (g.ns - 1) * (g.nt - 2);
  sv.M.resize(static_cast<Eigen::Index>(N));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * 5);
  auto edge = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1, double w) {
    const bool d0 = g.is_dirichlet(i0, j0), d1 = g.is_dirichlet(i1, j1);
    if (!d0) trip.emplace_back(sv.id(i0, j0), sv.id(i0, j0), w);
    if (!d1) trip.emplace_back(sv.id(i1, j1), sv.id(i1, j1), w);
    if (!d0 && !d1) {
      trip.emplace_back(sv.id(i0, j0), sv.id(i1, j1), -w);
      trip.emplace_back(sv.id(i1, j1), sv.id(i0, j0), -w);
    }
  };
  for (std::size_t i = 0; i + 1 < g.ns; ++i) {
    const double ws = detail::s_edge_weight(g, i), wt = detail::t_edge_weight(g, i);
    for (std::size_t j = 0; j < g.nt; ++j) {
      if (j > 0 && j + 1 < g.nt) edge(i, j, i + 1, j, ws);
      if (j + 1 < g.nt) edge(i, j, i, j + 1, wt);
      if (!g.is_dirichlet(i, j)) {
        const double m = detail::node_mass(g, i);
        sv.M[sv.id(i, j)] = m;
        trip.emplace_back(sv.id(i, j), sv.id(i, j), 0.5 * beta.deriv(u(i, j)) * m);
      }
    }
  }
  sv.K.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  sv.K.setFromTriplets(trip.begin(), trip.end());
  sv.K.makeCompressed();
  return sv;
}

inline void require_zero_boundary(const AxiField& xi, const char* op) {
  const AxiGrid& g = xi.grid;
  const double scale = 1e-14 * (1.0 + xi.max_abs());
  for (std::size_t i = 0; i < g.ns; ++i)
    for (std::size_t j = 0; j < g.nt; ++j)
      if (g.is_dirichlet(i, j) && std::abs(xi(i, j)) > scale)
        throw InvalidParameter(std::string(op) + ": test function must vanish on the outer boundary");
}

/// Q(xi) = integral |grad xi|^2 + beta'(u)/2 xi^2 over R^n, written as an
/// explicit sum over grid edges and nodes; equals xi^T K xi.
inline double quadratic_form(const AxiField& u, const AxiField& xi, const ReactionTerm& beta) {
  require_same_grid(u, xi, "quadratic_form");
  require_zero_boundary(xi, "quadratic_form");
  const AxiGrid& g = u.grid;
  return ordered_row_sum(g.ns - 1, [&](std::size_t i) {
    const double ws = detail::s_edge_weight(g, i), wt = detail::t_edge_weight(g, i);
    const double m = detail::node_mass(g, i);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.nt; ++j) {
      if (j > 0 && j + 1 < g.nt) acc += ws * sqr(xi(i + 1, j) - xi(i, j));
      if (j + 1 < g.nt) acc += wt * sqr(xi(i, j + 1) - xi(i, j));
      if (!g.is_dirichlet(i, j)) acc += 0.5 * beta.deriv(u(i, j)) * m * sqr(xi(i, j));
    }
    return acc;
  });
}

/// Weighted squared norm sum xi^2 w_i ht over non-Dirichlet nodes.
inline double weighted_norm_sq(const AxiField& xi) {
  const AxiGrid& g = xi.grid;
  return ordered_row_sum(g.ns - 1, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 1; j + 1 < g.nt; ++j) acc += sqr(xi(i, j));
    return acc * detail::node_mass(g, i);
  });
}

/// Raised when the inverse-iteration factorization breaks down.
class SpectralBreakdown : public Error {
public:
  SpectralBreakdown(const std::string& what, std::vector<double> trace)
      : Error(what), rayleigh_trace(std::move(trace)) {}
  std::vector<double> rayleigh_trace;
};

inline double gershgorin_lower_bound(const SecondVariation& sv) {
  double lb = std::numeric_limits<double>::infinity();
  for (int col = 0; col < sv.K.outerSize(); ++col) {
    double diag = 0.0, off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(sv.K, col); it; ++it)
      if (it.row() == col) diag += it.value();
      else off += std::abs(it.value());
    lb = std::min(lb, (diag - off) / sv.M[col]);
  }
  return lb;
}

/// True when K + tol M is positive definite, i.e. lambda_min(M^{-1}K) > -tol,
/// read off the LDLT pivots (Sylvester inertia).
inline bool certify_lower_bound(const SecondVariation& sv, double tol) {
  Eigen::SparseMatrix<double> A = sv.K;
  for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += tol * sv.M[k];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) return false;
  return (ldlt.vectorD().array() > 0.0).all();
}

/// Smallest eigenvalue of M^{-1}K by shifted inverse iteration. The shift
/// sits below the Gershgorin bound, so K - shift M is positive definite; the
/// start vector is all ones.
inline SpectralReport linearized_rayleigh_min(const AxiField& u, const ReactionTerm& beta, int max_iter,
                                              double tol, std::optional<double> residual_tol = 1e-6) {
  if (residual_tol) {
    const double res = semilinear_residual_sup(u, beta);
    if (res > *residual_tol)
      throw PreconditionViolation("linearized_rayleigh_min: field does not solve the equation (residual " +
                                  std::to_string(res) + ")");
  }
  const SecondVariation sv = assemble_second_variation(u, beta);
  const double lb = gershgorin_lower_bound(sv);
  const double shift = lb - 0.01 * (1.0 + std::abs(lb));
  Eigen::SparseMatrix<double> A = sv.K;
  for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) -= shift * sv.M[k];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  std::vector<double> trace;
  if (ldlt.info() != Eigen::Success) throw SpectralBreakdown("linearized_rayleigh_min: factorization failed", trace);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(sv.M.size());
  const auto mnorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(sv.M.cwiseProduct(v))); };
  x /= mnorm(x);
  SpectralReport rep;
  double lambda = x.dot(sv.K * x);
  double res = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd y = ldlt.solve(sv.M.cwiseProduct(x));
    const double ny = mnorm(y);
    if (!std::isfinite(ny) || ny == 0.0) throw SpectralBreakdown("linearized_rayleigh_min: linear solve broke down", trace);
    x = y / ny;
    lambda = x.dot(sv.K * x);
    trace.push_back(lambda);
    const Eigen::VectorXd r = sv.K * x - lambda * sv.M.cwiseProduct(x);
    res = std::sqrt(r.dot(r.cwiseQuotient(sv.M)));
    if (res <= tol) {
      ++it;
      break;
    }
  }
  rep.iterations = it;
  rep.rayleigh_min = lambda;
  rep.residual = res;
  rep.eigenvector = sv.unpack(x);
  rep.form_lhs = x.dot(sv.K * x);
  rep.form_rhs = 0.0;
  rep.certified = lambda >= -tol && certify_lower_bound(sv, tol);
  rep.exploratory = u.grid.n >= 6;
  const bool converged = res <= tol;
  if (lambda < -tol) rep.verdict = Verdict::unstable_direction_found;
  else if (converged || rep.certified) rep.verdict = Verdict::stable_on_grid;
  else rep.verdict = Verdict::inconclusive;
  return rep;
}

/// Centered u_s with u_s = 0 on the axis and a second-order one-sided
/// difference on the outer wall.
inline AxiField us_derivative(const AxiField& u) {
  const AxiGrid& g = u.grid;
  if (g.ns < 3 || u.values.size() != g.size())
    throw InvalidParameter("us_derivative: need at least three nodes in s and a filled field");
  AxiField c(g, 0.0);
  const double hs = g.hs();
  for (std::size_t j = 0; j < g.nt; ++j) {
    for (std::size_t i = 1; i + 1 < g.ns; ++i) c(i, j) = (u(i + 1, j) - u(i - 1, j)) / (2.0 * hs);
    const std::size_t e = g.ns - 1;
    c(e, j) = (3.0 * u(e, j) - 4.0 * u(e - 1, j) + u(e - 2, j)) / (2.0 * hs);
  }
  return c;
}

/// sup over nodes with s >= min_s of |Delta_h c - (n-2) c / s^2 - beta'(u) c / 2|,
/// the s-derivative of the equation.
inline double differentiated_residual(const AxiField& u, const AxiField& c, const ReactionTerm& beta, double min_s) {
  require_same_grid(u, c, "differentiated_residual");
  const AxiGrid& g = u.grid;
  double r = 0.0;
  for (std::size_t i = 1; i + 1 < g.ns; ++i) {
    const double s = g.s(i);
    if (s < min_s) continue;
    for (std::size_t j = 1; j + 1 < g.nt; ++j)
      r = std::max(r, std::abs(laplacian_at(c, i, j) - (g.n - 2) * c(i, j) / (s * s) -
                               0.5 * beta.deriv(u(i, j)) * c(i, j)));
  }
  return r;
}

/// Quintic smoothstep 6x^5 - 15x^4 + 10x^3 clamped to [0,1], and its slope.
inline double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}
inline double smoothstep5_slope(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * sqr(1.0 - x);
}

struct CutoffValue {
  double value, ds, dt;
};

/// rho_R and its gradient at (s, t).
inline CutoffValue cutoff_rho(const StabilityProbe& p, const AxiGrid& g, double s, double t) {
  if (p.cutoff == CutoffProfile::quintic_ball) {
    const double r = std::hypot(s, t);
    const double x = (r - p.R) / p.R;
    const double v = 1.0 - smoothstep5(x);
    const double dr = -smoothstep5_slope(x) / p.R;
    if (r == 0.0) return {v, 0.0, 0.0};
    return {v, dr * s / r, dr * t / r};
  }
  const double w = p.collar_width;
  const double a = (g.s_max - s) / w, b = (t - g.t_min) / w, c = (g.t_max - t) / w;
  const double qa = smoothstep5(a), qb = smoothstep5(b), qc = smoothstep5(c);
  return {qa * qb * qc, -smoothstep5_slope(a) / w * qb * qc,
          qa * (smoothstep5_slope(b) * qc - qb * smoothstep5_slope(c)) / w};
}

/// eta_{eps,R} = max(s, eps)^{-alpha} rho_R and its gradient.
inline CutoffValue capped_eta(const StabilityProbe& p, const AxiGrid& g, double s, double t) {
  const CutoffValue rho = cutoff_rho(p, g, s, t);
  const double se = std::max(s, p.eps_inner);
  const double pw = std::pow(se, -p.alpha);
  const double dpw = s > p.eps_inner ? -p.alpha * std::pow(s, -p.alpha - 1.0) : 0.0;
  return {pw * rho.value, dpw * rho.value + pw * rho.ds, pw * rho.dt};
}

/// Evaluates both sides of (n-2) int u_s^2 eta^2 s^{-2} <= int u_s^2 |grad eta|^2
/// for the capped test function. A negative defect rhs - lhs exhibits the
/// direction xi = u_s eta along which the inequality fails on this grid.
inline SpectralReport probe_inequality(const AxiField& u, const StabilityProbe& probe,
                                       const ReactionTerm* beta = nullptr) {
  probe.validate();
  const AxiGrid& g = u.grid;
  if (probe.cutoff == CutoffProfile::quintic_ball &&
      (2.0 * probe.R > g.s_max || 2.0 * probe.R > -g.t_min || 2.0 * probe.R > g.t_max))
    throw InvalidParameter("probe_inequality: B_2R must lie inside the grid");
  const AxiField c = us_derivative(u);
  const double hs = g.hs();
  std::vector<double> lhs_row(g.ns - 1), rhs_row(g.ns - 1);
  AxiField xi(g, 0.0);
  parallel_rows(g.ns - 1, [&](std::size_t i) {
    const double s = g.s(i);
    const double m = detail::node_mass(g, i);
    double l = 0.0, r = 0.0;
    for (std::size_t j = 1; j + 1 < g.nt; ++j) {
      const CutoffValue eta = capped_eta(probe, g, s, g.t(j));
      // On the axis u_s / s tends to u_ss.
      const double q = i == 0 ? 2.0 * (u(1, j) - u(0, j)) / (hs * hs) : c(i, j) / s;
      l += m * q * q * eta.value * eta.value;
      r += m * c(i, j) * c(i, j) * (eta.ds * eta.ds + eta.dt * eta.dt);
      xi(i, j) = c(i, j) * eta.value;
    }
    lhs_row[i] = l;
    rhs_row[i] = r;
  });
  SpectralReport rep;
  rep.probe = probe;
  for (std::size_t i = 0; i + 1 < g.ns; ++i) {
    rep.form_lhs += (g.n - 2) * lhs_row[i];
    rep.form_rhs += rhs_row[i];
  }
  rep.alpha_integrable = probe.alpha < 0.5 * (g.n - 1);
  const double scale = 1e-14 * (std::abs(rep.form_lhs) + std::abs(rep.form_rhs));
  rep.verdict = rep.defect() < -scale ? Verdict::unstable_direction_found : Verdict::stable_on_grid;
  rep.exploratory = g.n >= 6;
  if (beta) {
    const double nrm = weighted_norm_sq(xi);
    rep.rayleigh_min = nrm > 0.0 ? quadratic_form(u, xi, *beta) / nrm : 0.0;
  }
  rep.eigenvector = std::move(xi);
  return rep;
}

struct AlphaWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
  bool contains(double a) const { return !empty && a > lo && a < hi; }
};

/// Exponents with 2 alpha > n - 2 > alpha^2: the open interval
/// ((n-2)/2, sqrt(n-2)), nonempty exactly for 2 < n < 6.
inline AlphaWindow admissible_alpha(int n) {
  if (n < 2) throw InvalidParameter("admissible_alpha: n must be at least 2");
  AlphaWindow w;
  w.lo = 0.5 * (n - 2);
  w.hi = std::sqrt(static_cast<double>(n - 2));
  w.empty = !(w.lo < w.hi);
  return w;
}

/// eps(R) = R^{-1/(n-1-2 alpha-eps0)}.
inline double epsilon_schedule(int n, double alpha, double eps0, double R) {
  const double denom = (n - 1) - 2.0 * alpha - eps0;
  if (!(denom > 0.0)) throw InvalidParameter("epsilon_schedule: need n - 1 > 2 alpha + eps0");
  if (!(R > 0.0)) throw InvalidParameter("epsilon_schedule: R must be positive");
  return std::pow(R, -1.0 / denom);
}

struct LogCutoff {
  AxiField field;
  double closed_form = 0.0;  // 2 pi / log R
};

/// Radial value of the planar logarithmic cutoff.
inline double log_cutoff_value(double R, double r) {
  if (r < 1.0) return 1.0;
  if (r >= R) return 0.0;
  return (std::log(R) - std::log(r)) / std::log(R);
}

/// Planar logarithmic cutoff: 1 on |x| < 1, (log R - log|x|)/log R on
/// [1, R], 0 beyond. Sampled on an n = 2 grid (s, t) = (|x_1|, x_2).
inline LogCutoff log_cutoff_2d(double R, const AxiGrid& grid) {
  if (!(R > 1.0)) throw InvalidParameter("log_cutoff_2d: need R > 1");
  LogCutoff out;
  out.field = AxiField::from_function(grid, [R](double s, double t) { return log_cutoff_value(R, std::hypot(s, t)); });
  out.closed_form = 2.0 * pi / std::log(R);
  return out;
}

/// Independent evaluation of integral over R^2 of |grad eta|^2: polar
/// coordinates, eta' by centered differences of the radial function,
/// composite Simpson on each smooth piece.
inline double log_cutoff_energy_numeric(double R, std::size_t panels = 4096) {
  const double h = 1e-6;
  auto integrand = [&](double r) {
    const double lo = std::max(r - h, 1.0), hi = std::min(r + h, R);
    const double d = (log_cutoff_value(R, hi) - log_cutoff_value(R, lo)) / (hi - lo);
    return 2.0 * pi * r * d * d;
  };
  // Smooth in log r on [1, R]; substitute r = e^x.
  const double L = std::log(R);
  double acc = 0.0;
  const double dx = L / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    const double a = dx * static_cast<double>(k), b = a + dx, m = 0.5 * (a + b);
    auto f = [&](double x) { return integrand(std::exp(x)) * std::exp(x); };
    acc += dx / 6.0 * (f(a) + 4.0 * f(m) + f(b));
  }
  return acc;
}

}  // namespace fblab
