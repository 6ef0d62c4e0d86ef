#pragma once

#include <chrono>
#include <cstdio>
#include <string>

#include "json.hpp"

#include "fblab/axisym.hpp"
#include "fblab/config.hpp"
#include "fblab/io.hpp"
#include "fblab/onephase.hpp"
#include "fblab/profile1d.hpp"
#include "fblab/reaction.hpp"
#include "fblab/stability.hpp"

#ifndef FBLAB_VERSION
#define FBLAB_VERSION "0.0.0"
#endif

namespace fblab {

/// A module error tagged with the operation that raised it.
class OperationError : public Error {
 public:
  OperationError(const std::string& op, const std::string& msg) : Error(op + ": " + msg), op_(op) {}
  const std::string& operation() const { return op_; }

 private:
  std::string op_;
};

struct RunOutput {
  nlohmann::json report;
  io::OutputBundle files;
};

namespace detail {

class Runner {
 public:
  explicit Runner(const ExperimentConfig& c) : cfg(c) {}

  template <typename F>
  auto op(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record(name, t0);
      } else {
        auto v = f();
        record(name, t0);
        return v;
      }
    } catch (const OperationError&) {
      throw;
    } catch (const std::exception& e) {
      throw OperationError(name, e.what());
    }
  }

  const ExperimentConfig& cfg;
  nlohmann::json results = nlohmann::json::object();
  nlohmann::json timings = nlohmann::json::object();
  io::OutputBundle files;

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timings[name] = timings.contains(name) ? timings[name].get<double>() + dt : dt;
  }
};

inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json classification_json(const Classification& c) {
  return {{"case", std::string(to_string(c.tag))}, {"a", num(c.a)},
          {"b", num(c.b)},                         {"turning_point", num(c.turning_point)},
          {"min_value", num(c.min_value)},         {"defect", c.defect},
          {"even_defect", c.even_defect}};
}

/// max(0, (s - g(t)) / sqrt(1 + g'(t)^2)) with g(t) = c cosh(t / c).
inline double catenoid_ramp(double c, double s, double t) {
  const double g = c * std::cosh(t / c), dg = std::sinh(t / c);
  return std::max(0.0, (s - g) / std::sqrt(1.0 + dg * dg));
}

inline BoundaryModel far_field(Runner& r, const ReactionTerm& beta) {
  if (r.cfg.far_field == FarField::catenoid) {
    const double c = r.cfg.far_scale;
    return [c](double s, double t) { return catenoid_ramp(c, s, t); };
  }
  if (r.cfg.far_field == FarField::affine) {
    const double k = r.cfg.far_slope, b = r.cfg.far_offset;
    return [k, b](double, double t) { return k * t + b; };
  }
  const double reach = std::max(std::abs(r.cfg.grid.t_min), std::abs(r.cfg.grid.t_max)) + 2.0;
  auto p = std::make_shared<Profile1D>(
      r.op("shoot", [&] { return shoot(beta, r.cfg.a, std::max(r.cfg.halfwidth, reach), r.cfg.step); }));
  p->finalize();
  return [p](double, double t) { return p->eval(t); };
}

inline SolveResult solved_field(Runner& r, const ReactionTerm& beta) {
  const BoundaryModel bd = far_field(r, beta);
  SolveOptions opt;
  opt.tol = r.cfg.tol("newton");
  SolveResult sol = r.op("solve_semilinear", [&] { return solve_semilinear(beta, r.cfg.grid, bd, opt); });
  r.results["solve"] = {{"residual", sol.residual},
                        {"iterations", sol.iterations},
                        {"max_on_boundary", max_on_boundary(sol.field)},
                        {"lipschitz", lipschitz_monitor(sol.field)}};
  if (r.cfg.truncation_study)
    r.results["solve"]["truncation_influence"] =
        r.op("truncation_influence", [&] { return truncation_influence(beta, r.cfg.grid, bd, opt); });
  return sol;
}

inline void run_profile(Runner& r, const ReactionTerm& beta) {
  const A1Report a1 = r.op("validate_A1", [&] { return validate_A1(beta, r.cfg.tol("mass")); });
  r.results["A1"] = {{"passed", a1.all()}, {"mass", a1.measured_mass}};
  Profile1D p = r.op("shoot", [&] { return shoot(beta, r.cfg.a, r.cfg.halfwidth, r.cfg.step); });
  const Classification c = r.op("classify", [&] { return classify(p, beta, r.cfg.tol("classify")); });
  r.results["classification"] = classification_json(c);
  if (c.tag == ProfileCase::case_i) r.results["case_i_law_defect"] = std::abs(c.a * c.a - c.b * c.b - 1.0);
  r.files.add("profile.csv", io::profile_csv(p));
  r.files.add("reaction.csv", io::reaction_csv(tabulate(beta, -0.25, 1.25, 301)));
}

inline void run_solve(Runner& r, const ReactionTerm& beta) {
  const SolveResult sol = solved_field(r, beta);
  const EnergyBreakdown e = r.op("energy", [&] { return energy(sol.field, SmoothedPotential{&beta, 1.0}, true); });
  r.results["energy"] = {{"dirichlet", e.dirichlet}, {"potential", e.potential}, {"total", e.total}};
  r.files.add("field.csv", io::field_csv(sol.field));
  r.files.add("field.bin", io::field_binary(sol.field));
}

inline void run_stability(Runner& r, const ReactionTerm& beta) {
  const SolveResult sol = solved_field(r, beta);
  const SpectralReport spec = r.op("linearized_rayleigh_min", [&] {
    return linearized_rayleigh_min(sol.field, beta, r.cfg.max_iter, r.cfg.tol("spectral"), r.cfg.tol("residual"));
  });
  const SpectralReport probe = r.op("probe_inequality", [&] { return probe_inequality(sol.field, r.cfg.probe, &beta); });
  r.results["spectral"] = io::to_json(spec);
  r.results["probe"] = io::to_json(probe);
  r.results["probe"]["defect"] = probe.defect();
  r.results["probe"]["alpha_in_window"] = admissible_alpha(r.cfg.n).contains(r.cfg.probe.alpha);
  r.files.add("eigenvector.csv", io::field_csv(spec.eigenvector));
  r.files.add("probe_direction.csv", io::field_csv(probe.eigenvector));
}

/// Exterior of a ball of radius r0: u = r0 (1 - (r0/r)^{n-2}) / (n-2), or
/// r0 log(r/r0) in the plane. Harmonic, zero on the sphere, |grad u| = 1 there.
inline double sphere_exterior_solution(int n, double r0, double s, double t) {
  const double r = std::hypot(s, t);
  if (r <= r0) return 0.0;
  if (n == 2) return r0 * std::log(r / r0);
  return r0 * (1.0 - std::pow(r0 / r, n - 2)) / (n - 2);
}

inline void run_onephase(Runner& r) {
  const int n = r.cfg.n;
  const double r0 = r.cfg.radius;
  const std::size_t m = r.cfg.cells_per_unit;
  const AxiGrid g{n, static_cast<std::size_t>(1.5 * m) + 1, static_cast<std::size_t>(1.5 * m) + 1, 1.5 * r0,
                  0.25 * r0, 1.75 * r0};
  const auto phi = [r0](double s, double t) { return std::hypot(s, t) - r0; };
  const auto exact = [n, r0](double s, double t) { return sphere_exterior_solution(n, r0, s, t); };
  const HarmonicSolve hs = r.op("solve_prescribed_boundary", [&] { return solve_prescribed_boundary(g, phi, exact); });
  double err = 0.0;
  for (std::size_t i = 0; i < g.ns; ++i)
    for (std::size_t j = 0; j < g.nt; ++j) err = std::max(err, std::abs(hs.field(i, j) - exact(g.s(i), g.t(j))));
  r.results["harmonic_solve"] = {{"residual", hs.residual}, {"unknowns", hs.unknowns}, {"sup_error", err}};

  const RevolutionBoundary b = r.op("curvature_of_revolution", [&] {
    return curvature_of_revolution(sphere_generator(r0, r.cfg.boundary_samples, 1.8, pi), n, PositiveSide::right);
  });
  double hdev = 0.0;
  for (double H : b.mean_curv) hdev = std::max(hdev, std::abs(H - (n - 1) / r0));
  r.results["curvature"] = {{"expected_H", (n - 1) / r0}, {"sup_deviation", hdev}};

  const ClaimHReport ch = r.op("check_claimH", [&] { return check_claimH(b, hs.field); });
  r.results["claimH"] = {{"sup_defect", ch.sup_defect},
                         {"gradient_defect", ch.gradient_defect},
                         {"gradient_warning", ch.gradient_warning},
                         {"samples", ch.used.size()}};

  StabilityProbe probe = r.cfg.probe;
  probe.cutoff = CutoffProfile::boundary_collar;
  probe.collar_width = std::min(probe.collar_width, 0.25 * r0);
  const SpectralReport bulk = r.op("probe_inequality", [&] { return probe_inequality(hs.field, probe); });
  // The form needs xi smooth across the free boundary: use the s-derivative
  // of the harmonic continuation r0^{n-1} s / r^n into the ball.
  const AxiField xi = AxiField::from_function(g, [&](double s, double t) {
    return std::pow(r0, n - 1) * s / std::pow(std::hypot(s, t), n) * capped_eta(probe, g, s, t).value;
  });
  const OnePhaseForm form = r.op("onephase_stability_form", [&] {
    return onephase_stability_form(b, hs.field, xi, r.cfg.tol("harmonic"));
  });
  r.results["stability_form"] = {{"lhs", form.lhs}, {"rhs", form.rhs}, {"defect", form.defect()},
                                 {"unstable", form.unstable()}};
  r.results["probe"] = io::to_json(bulk);
  r.results["probe"]["defect"] = bulk.defect();
  r.files.add("boundary.csv", io::boundary_csv(b));
  r.files.add("field.csv", io::field_csv(hs.field));
}

}  // namespace detail

/// Gamma-limit table: J_eps(eps u(t/eps)) for the slope-one profile against
/// J_0(max(0, t)) on [0,1] x [-1,1], planar and unweighted.
struct GammaRow {
  double eps, j_eps, j_zero, gap;
};

inline std::vector<GammaRow> gamma_limit_table(const ReactionTerm& beta, const std::vector<double>& epsilons,
                                               std::size_t nt) {
  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  Profile1D p = shoot(beta, 1.0, 1.0 / eps_min + 2.0, 1e-3);
  p.finalize();
  const AxiGrid g{2, 3, nt, 1.0, -1.0, 1.0};
  const AxiField limit = AxiField::from_function(g, [](double, double t) { return std::max(0.0, t); });
  const double j0 = energy(limit, OnePhasePotential{}, false).total;
  std::vector<GammaRow> rows;
  for (double e : epsilons) {
    const AxiField ue = AxiField::from_function(g, [&](double, double t) { return e * p.eval(t / e); });
    const double je = energy(ue, SmoothedPotential{&beta, e}, false).total;
    rows.push_back({e, je, j0, std::abs(je - j0)});
  }
  return rows;
}

namespace detail {

inline void run_blowdown(Runner& r, const ReactionTerm& beta) {
  const auto rows = r.op("gamma_limit", [&] { return gamma_limit_table(beta, r.cfg.epsilons, r.cfg.blowdown_nt); });
  nlohmann::json arr = nlohmann::json::array();
  std::vector<double> xs, ys;
  bool monotone = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    arr.push_back({{"eps", rows[k].eps}, {"J_eps", rows[k].j_eps}, {"J_0", rows[k].j_zero}, {"gap", rows[k].gap}});
    xs.push_back(rows[k].eps);
    ys.push_back(rows[k].gap);
    if (k > 0 && rows[k].gap > rows[k - 1].gap + 1e-4) monotone = false;
  }
  r.results["gamma_limit"] = arr;
  r.results["gap_nonincreasing"] = monotone;
  r.files.add("gamma_limit.dat", io::dat(xs, ys));
}

inline void run_window(Runner& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (int n : r.cfg.dimensions) {
    const AlphaWindow w = admissible_alpha(n);
    nlohmann::json row = {{"n", n}};
    if (w.empty) {
      row["admissible interval"] = "empty";
    } else {
      const double mid = 0.5 * (w.lo + w.hi);
      row["admissible interval"] = {w.lo, w.hi};
      row["alpha_mid"] = mid;
      row["eps_schedule"] = epsilon_schedule(n, mid, r.cfg.probe.eps0, r.cfg.schedule_R);
    }
    arr.push_back(row);
  }
  r.results["window"] = arr;
}

inline void run_figure1(Runner& r, const ReactionTerm& beta) {
  const double span = 6.0;
  struct Panel {
    const char* file;
    double a;
  };
  for (const Panel pn : {Panel{"figure1_i.dat", 2.0}, Panel{"figure1_ii.dat", 1.0}, Panel{"figure1_iii.dat", 0.5}}) {
    Profile1D p = r.op("shoot", [&] { return shoot(beta, pn.a, 3.0 * span, r.cfg.step); });
    const Classification c = r.op("classify", [&] { return classify(p, beta, r.cfg.tol("classify")); });
    // Case (iii) is drawn centered on its minimum.
    const double shift = c.tag == ProfileCase::case_iii ? c.turning_point : 0.0;
    p.finalize();
    std::vector<double> xs, ys;
    for (int k = 0; k <= 600; ++k) {
      const double x = -span + 2.0 * span * k / 600.0;
      xs.push_back(x);
      ys.push_back(p.eval(x + shift));
    }
    r.files.add(pn.file, io::dat(xs, ys));
    nlohmann::json j = classification_json(c);
    if (c.tag == ProfileCase::case_i) j["law_defect"] = std::abs(c.a * c.a - c.b * c.b - 1.0);
    if (c.tag == ProfileCase::case_ii) j["slope_defect"] = std::abs(c.a - 1.0);
    r.results[pn.file] = j;
  }
}

}  // namespace detail

/// Executes one experiment. Nothing is written; the caller commits the
/// returned files together with the report.
inline RunOutput run(const ExperimentConfig& cfg) {
  detail::Runner r(cfg);
  const bool needs_beta = cfg.experiment != Experiment::window && cfg.experiment != Experiment::onephase;
  std::optional<ReactionTerm> beta;
  if (needs_beta) beta = r.op("load_reaction", [&] { return make_reaction(cfg); });
  switch (cfg.experiment) {
    case Experiment::profile: detail::run_profile(r, *beta); break;
    case Experiment::solve: detail::run_solve(r, *beta); break;
    case Experiment::stability: detail::run_stability(r, *beta); break;
    case Experiment::onephase: detail::run_onephase(r); break;
    case Experiment::blowdown: detail::run_blowdown(r, *beta); break;
    case Experiment::window: detail::run_window(r); break;
    case Experiment::figure1: detail::run_figure1(r, *beta); break;
  }
  RunOutput out;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_echo(cfg.echo))));
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  out.report = {{"experiment", to_string(cfg.experiment)},
                {"config", echo},
                {"results", r.results},
                {"timings", r.timings},
                {"provenance", {{"version", FBLAB_VERSION}, {"config_hash", hash}, {"threads", threads()}}}};
  out.files = std::move(r.files);
  out.files.add("report.json", out.report.dump(2) + "\n");
  return out;
}

}  // namespace fblab
