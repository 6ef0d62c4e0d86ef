#pragma once

#include <cmath>
#include <vector>

#include "fblab/axisym.hpp"
#include "fblab/profile1d.hpp"

namespace fbtest {

inline const fblab::ReactionTerm& beta() {
  static const fblab::ReactionTerm b = fblab::make_polynomial_beta();
  return b;
}

inline const fblab::Profile1D& slope_one() {
  static const fblab::Profile1D p = fblab::shoot(beta(), 1.0, 30.0, 1e-3);
  return p;
}

// Discrete 1D problem w_{j+1} - 2 w_j + w_{j-1} = ht^2 beta(w_j) / 2 on the
// t-nodes of g, ends from the case-(ii) profile. Newton with a Thomas solve.
inline std::vector<double> discrete_line(const fblab::AxiGrid& g) {
  const std::size_t nt = g.nt;
  const double ht = g.ht();
  std::vector<double> w(nt);
  for (std::size_t j = 0; j < nt; ++j) w[j] = slope_one().eval(g.t(j));
  for (int it = 0; it < 50; ++it) {
    std::vector<double> diag(nt, 1.0), rhs(nt, 0.0), lo(nt, 0.0), up(nt, 0.0);
    double rmax = 0;
    for (std::size_t j = 1; j + 1 < nt; ++j) {
      rhs[j] = -(w[j + 1] - 2 * w[j] + w[j - 1] - 0.5 * ht * ht * beta().eval(w[j]));
      diag[j] = -2.0 - 0.5 * ht * ht * beta().deriv(w[j]);
      lo[j] = up[j] = 1.0;
      rmax = std::max(rmax, std::abs(rhs[j]));
    }
    if (rmax < 1e-15) break;
    for (std::size_t j = 1; j < nt; ++j) {
      const double f = lo[j] / diag[j - 1];
      diag[j] -= f * up[j - 1];
      rhs[j] -= f * rhs[j - 1];
    }
    std::vector<double> dw(nt);
    dw[nt - 1] = rhs[nt - 1] / diag[nt - 1];
    for (std::size_t j = nt - 1; j-- > 0;) dw[j] = (rhs[j] - up[j] * dw[j + 1]) / diag[j];
    for (std::size_t j = 0; j < nt; ++j) w[j] += dw[j];
  }
  return w;
}

// Case-(ii) extension solved on g with wall data from the discrete line.
inline fblab::SolveResult case_ii_field(const fblab::AxiGrid& g) {
  const auto w = discrete_line(g);
  const fblab::BoundaryModel bd = [&](double, double t) {
    return w[static_cast<std::size_t>(std::lround((t - g.t_min) / g.ht()))];
  };
  return fblab::solve_semilinear(beta(), g, bd);
}

}  // namespace fbtest
