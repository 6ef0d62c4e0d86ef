#include <gtest/gtest.h>

#include "fblab/onephase.hpp"
#include "fblab/stability.hpp"

using namespace fblab;

namespace {
// Exterior of the ball of radius r0: harmonic, zero on the sphere, unit slope there.
double exterior(int n, double r0, double s, double t) {
  const double r = std::hypot(s, t);
  return r <= r0 ? 0.0 : r0 * (1.0 - std::pow(r0 / r, n - 2)) / (n - 2);
}

Generator flat_generator(double t0, double s1, std::size_t m) {
  Generator g;
  g.dtau = s1 / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    g.s.push_back(g.dtau * static_cast<double>(k));
    g.t.push_back(t0);
  }
  return g;
}

struct SphereCase {
  AxiField u;
  RevolutionBoundary b;
};

// Positivity set outside the unit sphere on [0, 1.5] x [0.25, 1.75], h = 1/m.
SphereCase sphere_case(int n, std::size_t m) {
  const AxiGrid g{n, 3 * m / 2 + 1, 3 * m / 2 + 1, 1.5, 0.25, 1.75};
  const auto hs = solve_prescribed_boundary(
      g, [](double s, double t) { return std::hypot(s, t) - 1.0; },
      [n](double s, double t) { return exterior(n, 1.0, s, t); });
  return {hs.field, curvature_of_revolution(sphere_generator(1.0, 401, 1.8, pi), n, PositiveSide::right)};
}
}  // namespace

TEST(Curvature, CylinderAndSphereClosedForms) {
  for (int n : {3, 4, 5}) {
    for (double r : {0.5, 1.0, 3.0}) {
      const auto cyl = curvature_of_revolution(cylinder_generator(r, -1.0, 1.0, 33), n);
      for (std::size_t k = 0; k < cyl.size(); ++k) {
        EXPECT_DOUBLE_EQ(cyl.mean_curv[k], (n - 2) / r);
        EXPECT_EQ(cyl.k_profile[k], 0.0);
        EXPECT_EQ(cyl.nu_s[k], -1.0);
      }
      const auto sph = curvature_of_revolution(sphere_generator(r, 65), n);
      for (std::size_t k = 0; k < sph.size(); ++k) {
        EXPECT_NEAR(sph.mean_curv[k], (n - 1) / r, 1e-13 / r) << k;
        EXPECT_NEAR(std::hypot(sph.nu_s[k], sph.nu_t[k]), 1.0, 1e-15);
      }
    }
  }
  EXPECT_DOUBLE_EQ(curvature_of_revolution(cylinder_generator(2.0, 0.0, 1.0, 9), 3).mean_curv[4], 0.5);
  EXPECT_NEAR(curvature_of_revolution(sphere_generator(2.0, 33), 3).mean_curv[10], 1.0, 1e-14);
}

TEST(Curvature, CatenoidIsMinimalWithClosedFormCurvSq) {
  double prev = 0;
  for (std::size_t m : {257, 513, 1025}) {
    const auto b = curvature_of_revolution(catenoid_generator(1.0, -2.0, 2.0, m), 3);
    double eH = 0, eG = 0;
    for (std::size_t k = 1; k + 1 < b.size(); ++k) {
      eH = std::max(eH, std::abs(b.mean_curv[k]));
      eG = std::max(eG, std::abs(b.curv_sq[k] - 2.0 / std::pow(std::cosh(b.t[k]), 4)));
    }
    EXPECT_LT(eG, 1e-3);
    if (prev > 0) EXPECT_GE(std::log2(prev / eH), 1.8);
    prev = eH;
  }
  const double h = 4.0 / 1024;
  EXPECT_LT(prev, 10 * h * h);
  // h = 1/256 on the generator parameter.
  const auto b = curvature_of_revolution(catenoid_generator(1.0, -2.0, 2.0, 1025), 3);
  double eH = 0;
  for (double H : b.mean_curv) eH = std::max(eH, std::abs(H));
  EXPECT_LE(eH, 1e-4);
}

TEST(Curvature, InvariantsOnGenericProfile) {
  // Sampled wavy generator s = 1.5 + 0.4 sin(2t).
  Generator g;
  g.dtau = 3.0 / 400;
  for (int k = 0; k <= 400; ++k) {
    const double t = -1.5 + k * g.dtau;
    g.t.push_back(t);
    g.s.push_back(1.5 + 0.4 * std::sin(2 * t));
  }
  for (int n : {3, 4, 6}) {
    const auto b = curvature_of_revolution(g, n);
    for (std::size_t k = 0; k < b.size(); ++k) {
      EXPECT_NEAR(std::hypot(b.nu_s[k], b.nu_t[k]), 1.0, 1e-14);
      EXPECT_GE(b.curv_sq[k] + 1e-14, b.mean_curv[k] * b.mean_curv[k] / (n - 1));
      EXPECT_NEAR(b.mean_curv[k], b.k_profile[k] + (n - 2) * b.k_rotation[k], 1e-14);
    }
  }
}

TEST(Curvature, FlatBoundaryAndUnitSphereIntegral) {
  const auto flat = curvature_of_revolution(flat_generator(0.3, 2.0, 33), 4, PositiveSide::left);
  for (std::size_t k = 0; k < flat.size(); ++k) {
    EXPECT_NEAR(flat.mean_curv[k], 0.0, 1e-12);
    EXPECT_EQ(flat.nu_t[k], -1.0);
  }
  const auto sph = curvature_of_revolution(sphere_generator(1.0, 2001), 3);
  double area = 0, hint = 0;
  for (std::size_t k = 0; k < sph.size(); ++k) {
    area += sph.area_weight[k];
    hint += sph.area_weight[k] * sph.mean_curv[k];
  }
  EXPECT_NEAR(area, 4 * pi, 1e-5);
  EXPECT_NEAR(hint, 8 * pi, 2e-5);
  EXPECT_NEAR(hint / area, 2.0, 1e-12);
}

TEST(Curvature, AxisTouchWithTiltedTangentThrows) {
  Generator cone;
  cone.dtau = 0.1;
  for (int k = 0; k < 10; ++k) {
    cone.s.push_back(0.1 * k);
    cone.t.push_back(0.1 * k);
  }
  EXPECT_THROW(curvature_of_revolution(cone, 3), CurvatureSingularity);
  Generator tiny;
  tiny.s = {1, 1};
  tiny.t = {0, 1};
  EXPECT_THROW(curvature_of_revolution(tiny, 3), InvalidParameter);
}

TEST(HarmonicSolve, ExteriorSphereConvergesAtSecondOrder) {
  double prev = 0;
  for (std::size_t m : {16, 32, 64}) {
    const auto c = sphere_case(3, m);
    double e = 0;
    for (std::size_t i = 0; i < c.u.grid.ns; ++i)
      for (std::size_t j = 0; j < c.u.grid.nt; ++j)
        e = std::max(e, std::abs(c.u(i, j) - exterior(3, 1.0, c.u.grid.s(i), c.u.grid.t(j))));
    if (prev > 0) EXPECT_GE(std::log2(prev / e), 1.7) << m;
    prev = e;
  }
}

TEST(StabilityForm, FlatBoundaryHasZeroLhs) {
  const AxiGrid g{3, 33, 33, 2.0, -1.0, 1.0};
  const auto u = AxiField::from_function(g, [](double, double t) { return std::max(0.0, t); });
  const auto b = curvature_of_revolution(flat_generator(0.0, 2.0, 65), 3, PositiveSide::left);
  const auto xi = AxiField::from_function(g, [](double s, double t) { return (2 - s) * (1 - t * t) * std::cos(s); });
  const auto f = onephase_stability_form(b, u, xi);
  EXPECT_EQ(f.lhs, 0.0);
  EXPECT_GT(f.rhs, 0.0);
  EXPECT_FALSE(f.unstable());
  const auto z = onephase_stability_form(b, u, AxiField(g, 0.0));
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
}

TEST(StabilityForm, PreconditionsAndMismatch) {
  const AxiGrid g{3, 33, 33, 2.0, -1.0, 1.0};
  const auto u = AxiField::from_function(g, [](double, double t) { return std::max(0.0, t); });
  const auto shifted = curvature_of_revolution(flat_generator(0.5, 2.0, 65), 3, PositiveSide::left);
  EXPECT_THROW(onephase_stability_form(shifted, u, AxiField(g, 0.0)), GeometryMismatch);
  const auto bumpy = AxiField::from_function(g, [](double s, double t) { return std::max(0.0, t) * (1 + s * s); });
  const auto b = curvature_of_revolution(flat_generator(0.0, 2.0, 65), 3, PositiveSide::left);
  EXPECT_THROW(onephase_stability_form(b, bumpy, AxiField(g, 0.0)), PreconditionViolation);
  const auto b4 = curvature_of_revolution(flat_generator(0.0, 2.0, 65), 4, PositiveSide::left);
  EXPECT_THROW(onephase_stability_form(b4, u, AxiField(g, 0.0)), InvalidParameter);
}

TEST(ClaimH, FlatAndTiltedOneDimensionalFields) {
  const AxiGrid g{3, 65, 65, 2.0, -1.0, 1.0};
  const auto b = curvature_of_revolution(flat_generator(0.0, 2.0, 129), 3, PositiveSide::left);
  for (double a : {1.0}) {
    const auto u = AxiField::from_function(g, [a](double, double t) { return std::max(0.0, a * t); });
    const auto rep = check_claimH(b, u);
    EXPECT_LT(rep.sup_defect, 1e-12);
    EXPECT_LT(rep.gradient_defect, 1e-12);
    EXPECT_FALSE(rep.gradient_warning);
    EXPECT_FALSE(rep.used.empty());
    for (std::size_t k = 0; k < rep.used.size(); ++k) {
      EXPECT_NEAR(rep.normal_derivative[k], 0.0, 1e-12);
      EXPECT_EQ(rep.curvature_term[k], 0.0);
    }
  }
  const auto steep = AxiField::from_function(g, [](double, double t) { return std::max(0.0, 2.0 * t); });
  EXPECT_THROW(check_claimH(b, steep), PreconditionViolation);
  const auto far = curvature_of_revolution(flat_generator(5.0, 2.0, 9), 3, PositiveSide::left);
  EXPECT_THROW(check_claimH(far, steep), GeometryMismatch);
}

TEST(ClaimH, ExteriorSphereDefectDecaysAtFirstOrder) {
  for (int n : {3, 4}) {
    std::vector<double> d;
    for (std::size_t m : {64, 128, 256}) {
      const auto c = sphere_case(n, m);
      const auto rep = check_claimH(c.b, c.u);
      EXPECT_LT(rep.gradient_defect, 1e-2);
      d.push_back(rep.sup_defect);
    }
    EXPECT_GE(std::log2(d[0] / d[1]), 0.9) << n;
    EXPECT_GE(std::log2(d[1] / d[2]), 0.9) << n;
  }
}

TEST(GradientIdentity, ExactOnQuadraticAndZeroOnOneDimensional) {
  const AxiGrid g{3, 17, 17, 2.0, -1.0, 1.0};
  const auto q = gradient_magnitude_identity(AxiField::from_function(g, [](double s, double t) { return s * s + t * t; }));
  EXPECT_LT(q.sup, 1e-12);
  const auto z = gradient_magnitude_identity(AxiField::from_function(g, [](double, double t) { return std::sin(t); }));
  EXPECT_EQ(z.sup, 0.0);
}

TEST(GradientIdentity, SecondOrderOnAnalyticField) {
  double prev = 0;
  for (std::size_t m : {129, 257, 513, 1025}) {
    const AxiGrid g{3, m, m, 2.0, -1.0, 1.0};
    const auto u = AxiField::from_function(g, [](double s, double t) { return std::cosh(s) * std::sin(t) + s * s * t; });
    const double e = gradient_magnitude_identity(u).sup;
    if (prev > 0) EXPECT_GE(std::log2(prev / e), 1.9) << m;
    prev = e;
  }
}

TEST(DualPath, FormDefectMatchesBulkProbeAfterExtrapolation) {
  // xi = u_s eta continued smoothly into the ball (u_s = s / r^3 for n = 3).
  const int n = 3;
  StabilityProbe p;
  p.alpha = 0.75;
  p.cutoff = CutoffProfile::boundary_collar;
  p.collar_width = 0.25;
  std::vector<double> form, bulk;
  for (std::size_t m : {32, 64, 128}) {
    const auto c = sphere_case(n, m);
    const auto& g = c.u.grid;
    const auto xi = AxiField::from_function(g, [&](double s, double t) {
      return s / std::pow(std::hypot(s, t), 3) * capped_eta(p, g, s, t).value;
    });
    form.push_back(onephase_stability_form(c.b, c.u, xi).defect());
    bulk.push_back(probe_inequality(c.u, p).defect());
  }
  const double rf = 2 * form[2] - form[1], rb = 2 * bulk[2] - bulk[1];
  EXPECT_LE(std::abs(rf - rb), 1e-2 * std::abs(rb));
  // Both paths move towards each other under refinement.
  EXPECT_LT(std::abs(form[2] - bulk[2]), std::abs(form[0] - bulk[0]));
}
