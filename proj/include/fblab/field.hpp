#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fblab/common.hpp"

namespace fblab {

/// Uniform node grid on [0, s_max] x [t_min, t_max] in the (s, t) half-plane,
/// s = |x'| and t = x_n, for an axially symmetric function on R^n.
struct AxiGrid {
  int n = 3;
  std::size_t ns = 3;
  std::size_t nt = 3;
  double s_max = 1.0;
  double t_min = 0.0;
  double t_max = 1.0;

  double hs() const { return s_max / static_cast<double>(ns - 1); }
  double ht() const { return (t_max - t_min) / static_cast<double>(nt - 1); }
  double s(std::size_t i) const { return static_cast<double>(i) * hs(); }
  double t(std::size_t j) const { return t_min + static_cast<double>(j) * ht(); }
  std::size_t size() const { return ns * nt; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * nt + j; }

  /// Nodes carrying Dirichlet data: outer wall s = s_max and the two caps.
  bool is_dirichlet(std::size_t i, std::size_t j) const {
    return i + 1 == ns || j == 0 || j + 1 == nt;
  }

  void validate() const {
    if (n < 2) throw InvalidParameter("AxiGrid: dimension n must be at least 2");
    if (ns < 3 || nt < 3) throw InvalidParameter("AxiGrid: need at least 3x3 nodes");
    if (!(s_max > 0.0) || !(t_max > t_min)) throw InvalidParameter("AxiGrid: empty domain");
  }

  bool same_as(const AxiGrid& o) const {
    return n == o.n && ns == o.ns && nt == o.nt && s_max == o.s_max && t_min == o.t_min &&
           t_max == o.t_max;
  }

  /// Grid with every extent multiplied by eps (same node counts).
  AxiGrid scaled(double eps) const {
    AxiGrid g = *this;
    g.s_max *= eps;
    g.t_min *= eps;
    g.t_max *= eps;
    return g;
  }
};

/// Weight of node column i in the axisymmetric measure s^{n-2} ds (times the
/// (n-2)-sphere area). The axis column uses the half cell [0, hs/2].
inline double column_weight(const AxiGrid& g, std::size_t i) {
  const double c = unit_sphere_area(g.n - 2);
  const double hs = g.hs();
  if (i == 0) return c * std::pow(0.5 * hs, g.n - 1) / (g.n - 1);
  return c * std::pow(g.s(i), g.n - 2) * hs;
}

/// Scalar field sampled on an AxiGrid; row i holds the values at s = s_i.
struct AxiField {
  AxiGrid grid;
  std::vector<double> values;

  AxiField() = default;
  explicit AxiField(const AxiGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {
    grid.validate();
  }

  template <typename F>
  static AxiField from_function(const AxiGrid& g, F&& f) {
    AxiField u(g);
    for (std::size_t i = 0; i < g.ns; ++i)
      for (std::size_t j = 0; j < g.nt; ++j) u(i, j) = f(g.s(i), g.t(j));
    return u;
  }

  double& operator()(std::size_t i, std::size_t j) { return values[grid.index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }

  bool contains(double s, double t, double slack = 1e-12) const {
    const double ss = slack * (1.0 + grid.s_max);
    const double st = slack * (1.0 + std::abs(grid.t_max) + std::abs(grid.t_min));
    return s >= -ss && s <= grid.s_max + ss && t >= grid.t_min - st && t <= grid.t_max + st;
  }

  /// Bilinear interpolation; throws DomainError outside the grid.
  double sample(double s, double t) const {
    if (!contains(s, t)) throw DomainError("AxiField::sample: point outside the grid");
    const double hs = grid.hs(), ht = grid.ht();
    const double fs = std::clamp(s / hs, 0.0, static_cast<double>(grid.ns - 1));
    const double ft = std::clamp((t - grid.t_min) / ht, 0.0, static_cast<double>(grid.nt - 1));
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(fs), grid.ns - 2);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(ft), grid.nt - 2);
    const double a = fs - static_cast<double>(i);
    const double b = ft - static_cast<double>(j);
    const AxiField& u = *this;
    return (1 - a) * (1 - b) * u(i, j) + a * (1 - b) * u(i + 1, j) + (1 - a) * b * u(i, j + 1) +
           a * b * u(i + 1, j + 1);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

inline void require_same_grid(const AxiField& a, const AxiField& b, const char* op) {
  if (!a.grid.same_as(b.grid)) throw InvalidParameter(std::string(op) + ": grid mismatch");
}

}  // namespace fblab
