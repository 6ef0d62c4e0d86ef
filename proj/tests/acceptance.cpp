// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "fblab/experiments.hpp"
#include "fblab/onephase.hpp"
#include "fblab/profile1d.hpp"
#include "fblab/reaction.hpp"
#include "fblab/stability.hpp"
#include "support.hpp"

using namespace fblab;
using fbtest::beta;

namespace {
struct Outcome {
  bool ok;
  std::string detail;
};

int failures = 0;

// Runs one criterion; `budget` is the stated runtime bound in seconds for the whole check.
void criterion(int id, const char* name, double budget, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = sec <= budget;
  const bool ok = o.ok && in_time;
  if (!ok) ++failures;
  std::printf("%s %2d %-36s %s [%.2f s / %g s%s]\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), sec, budget,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

double rate(double coarse, double fine) { return std::log2(coarse / fine); }

double exterior(int n, double r0, double s, double t) {
  const double r = std::hypot(s, t);
  return r <= r0 ? 0.0 : r0 * (1.0 - std::pow(r0 / r, n - 2)) / (n - 2);
}

// Root of p(x) = level by bisection on the sampled range.
double crossing(const Profile1D& p, double level) {
  double lo = p.xs.front(), hi = p.xs.back();
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (p.eval(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

int main() {
  set_threads(1);

  criterion(1, "case-(i) law a^2-b^2=1", 4.0, [] {
    double worst = 0;
    for (double a : {1.1, 1.5, 2.0, 5.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto c = classify(shoot(beta(), a, 20.0, 1e-3), beta());
      if (c.tag != ProfileCase::case_i) return Outcome{false, "a=" + num(a) + " not case_i"};
      if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > 1.0)
        return Outcome{false, "a=" + num(a) + " over 1 s"};
      worst = std::max(worst, std::abs(a * a - c.b * c.b - 1.0));
    }
    return Outcome{worst <= 1e-6, "max |a^2-b^2-1| = " + num(worst)};
  });

  criterion(2, "case-(ii) slope one and oracle", 1.0, [] {
    const auto p = shoot(beta(), 1.0, 20.0, 1e-3);
    double slope = 0;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (p.us[k] >= 1.0) slope = std::max(slope, std::abs(p.dus[k] - 1.0));
    const auto q = unique_increasing_profile(beta(), 1e-3, 3.0, 4000);
    const double shift = crossing(p, 0.5) - crossing(q, 0.5);
    double dist = 0;
    for (std::size_t k = 0; k < q.size(); ++k) dist = std::max(dist, std::abs(p.eval(q.xs[k] + shift) - q.us[k]));
    return Outcome{slope <= 1e-8 && dist <= 1e-6, "slope defect " + num(slope) + ", sup distance " + num(dist)};
  });

  criterion(3, "case-(iii) Phi(1)-Phi(y0)=a^2", 1.0, [] {
    const double a = 0.5;
    const auto c = classify(shoot(beta(), a, 20.0, 1e-3), beta());
    const double d = std::abs(beta().primitive(1.0) - beta().primitive(c.min_value) - a * a);
    return Outcome{c.tag == ProfileCase::case_iii && d <= 1e-6, "y0 = " + num(c.min_value) + ", defect " + num(d)};
  });

  criterion(4, "dimension window", 1e-3, [] {
    bool ok = true;
    for (int n : {3, 4, 5}) {
      const auto w = admissible_alpha(n);
      ok = ok && !w.empty && w.lo == (n - 2) / 2.0 && w.hi == std::sqrt(double(n - 2));
    }
    for (int n : {2, 6, 7, 8}) ok = ok && admissible_alpha(n).empty;
    return Outcome{ok, "n=3,4,5 exact; n=2,6,7,8 empty"};
  });

  criterion(5, "round trip beta <-> profile", 2.0, [] {
    const auto rb = beta_from_profile(unique_increasing_profile(beta(), 1e-4, 2.0, 4000));
    double err = 0;
    for (int k = 0; k <= 900; ++k) {
      const double t = 0.05 + k * 1e-3;
      err = std::max(err, std::abs(rb.beta.eval(t) - beta().eval(t)));
    }
    return Outcome{err <= 1e-6, "sup error on [0.05,0.95] = " + num(err)};
  });

  criterion(6, "stability of 1D minimizer extension", 90.0, [] {
    std::string detail;
    bool ok = true;
    for (int n : {3, 4, 5}) {
      const auto t0 = std::chrono::steady_clock::now();
      const AxiGrid g{n, 129, 129, 8.0, -8.0, 8.0};
      const auto sol = fbtest::case_ii_field(g);
      const auto spec = linearized_rayleigh_min(sol.field, beta(), 1000, 1e-8);
      double worst = std::numeric_limits<double>::infinity();
      const auto w = admissible_alpha(n);
      for (double alpha : {0.0, 0.5 * (w.lo + w.hi), 1.2})
        for (double R : {1.5, 2.0, 3.5}) {
          StabilityProbe p;
          p.alpha = alpha;
          p.R = R;
          worst = std::min(worst, probe_inequality(sol.field, p).defect());
        }
      StabilityProbe collar;
      collar.cutoff = CutoffProfile::boundary_collar;
      worst = std::min(worst, probe_inequality(sol.field, collar).defect());
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ok = ok && spec.rayleigh_min >= -1e-6 && worst >= -1e-10 && sec < 30.0;
      detail += "n=" + std::to_string(n) + ": lambda " + num(spec.rayleigh_min) + ", min defect " + num(worst) +
                " (" + num(sec) + " s); ";
    }
    return Outcome{ok, detail};
  });

  criterion(7, "Gamma-limit gaps nonincreasing", 10.0, [] {
    const auto rows = gamma_limit_table(beta(), {1.0, 0.5, 0.25, 0.125, 0.0625}, 2049);
    bool ok = true;
    std::string gaps;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      gaps += num(rows[k].gap) + (k + 1 < rows.size() ? " " : "");
      if (k > 0) ok = ok && rows[k].gap <= rows[k - 1].gap + 1e-4;
    }
    return Outcome{ok, "gaps " + gaps};
  });

  criterion(8, "discretization order", 10.0, [] {
    double lap_rate = 1e9;
    double prev = 0;
    for (std::size_t m : {17, 33, 65, 129}) {
      const AxiGrid g{3, m, m, 2.0, -1.0, 1.0};
      const auto L = apply_axisym_laplacian(
          AxiField::from_function(g, [](double s, double t) { return std::exp(-s * s) * std::cos(t); }));
      double e = 0;
      for (std::size_t i = 0; i + 1 < g.ns; ++i)
        for (std::size_t j = 1; j + 1 < g.nt; ++j) {
          const double s = g.s(i), t = g.t(j);
          e = std::max(e, std::abs(L(i, j) - (4 * s * s - 2 - 2 - 1) * std::exp(-s * s) * std::cos(t)));
        }
      if (prev > 0) lap_rate = std::min(lap_rate, rate(prev, e));
      prev = e;
    }
    double id_rate = 1e9;
    prev = 0;
    for (std::size_t m : {129, 257, 513, 1025}) {
      const AxiGrid g{3, m, m, 2.0, -1.0, 1.0};
      const auto u = AxiField::from_function(g, [](double s, double t) { return std::cosh(s) * std::sin(t) + s * s * t; });
      const double e = gradient_magnitude_identity(u).sup;
      if (prev > 0) id_rate = std::min(id_rate, rate(prev, e));
      prev = e;
    }
    return Outcome{lap_rate >= 1.9 && id_rate >= 1.9,
                   "min rate: laplacian " + num(lap_rate) + ", gradient identity " + num(id_rate)};
  });

  criterion(9, "geometry closed forms", 1.0, [] {
    double cyl = 0, sph = 0, cat = 0;
    for (double r : {0.5, 1.0, 2.0}) {
      for (double H : curvature_of_revolution(cylinder_generator(r, -1.0, 1.0, 65), 3).mean_curv)
        cyl = std::max(cyl, std::abs(H - 1.0 / r) * r);
      for (double H : curvature_of_revolution(sphere_generator(r, 129), 3).mean_curv)
        sph = std::max(sph, std::abs(H - 2.0 / r) * r);
    }
    for (double H : curvature_of_revolution(catenoid_generator(1.0, -2.0, 2.0, 1025), 3).mean_curv)
      cat = std::max(cat, std::abs(H));
    return Outcome{cyl <= 1e-14 && sph <= 1e-13 && cat <= 1e-4,
                   "cylinder " + num(cyl) + ", sphere " + num(sph) + " (relative), catenoid |H| " + num(cat)};
  });

  criterion(10, "claimH first-order decay", 120.0, [] {
    // Exact exterior-sphere one-phase configuration, n = 3, r0 = 1.
    std::vector<double> d;
    for (std::size_t m : {64, 128, 256}) {
      const AxiGrid g{3, 3 * m / 2 + 1, 3 * m / 2 + 1, 1.5, 0.25, 1.75};
      const auto hs = solve_prescribed_boundary(
          g, [](double s, double t) { return std::hypot(s, t) - 1.0; },
          [](double s, double t) { return exterior(3, 1.0, s, t); });
      const auto b = curvature_of_revolution(sphere_generator(1.0, 401, 1.8, pi), 3, PositiveSide::right);
      d.push_back(check_claimH(b, hs.field).sup_defect);
    }
    const double r1 = rate(d[0], d[1]), r2 = rate(d[1], d[2]);
    return Outcome{r1 >= 0.9 && r2 >= 0.9,
                   "defects " + num(d[0]) + " " + num(d[1]) + " " + num(d[2]) + ", rates " + num(r1) + " " + num(r2)};
  });

  criterion(11, "2D log-cutoff energy 2pi/log R", 1.0, [] {
    double worst = 0;
    for (double L : {2.0, 4.0, 8.0}) {
      const double e = log_cutoff_energy_numeric(std::exp(L));
      worst = std::max(worst, std::abs(e - 2 * pi / L) / (2 * pi / L));
    }
    return Outcome{worst <= 1e-3, "max relative error " + num(worst)};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
