#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "fblab/common.hpp"

namespace fblab {

struct QuadratureResult {
  double value = 0.0;
  double last_change = 0.0;
  std::size_t panels = 0;
};

/// Composite Simpson on a uniform subdivision of [a, b], doubling the number
/// of panels until two successive estimates differ by less than tol.
template <typename F>
QuadratureResult simpson(F&& f, double a, double b, double tol = 1e-12,
                         std::size_t max_panels = std::size_t{1} << 22) {
  if (a == b) return {0.0, 0.0, 0};
  std::size_t m = 16;  // even panel count
  double h = (b - a) / static_cast<double>(m);
  double ends = f(a) + f(b);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    const double v = f(a + static_cast<double>(k) * h);
    (k % 2 ? odd : even) += v;
  }
  double prev = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
  while (m < max_panels) {
    // Old nodes all become even nodes; new midpoints are the odd nodes.
    even += odd;
    m *= 2;
    h *= 0.5;
    odd = 0.0;
    for (std::size_t k = 1; k < m; k += 2) odd += f(a + static_cast<double>(k) * h);
    const double cur = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    const double change = std::abs(cur - prev);
    prev = cur;
    if (change < tol) return {cur, change, m};
  }
  return {prev, std::numeric_limits<double>::quiet_NaN(), m};
}

namespace detail {
template <typename F>
double adaptive_simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Recursive adaptive Simpson with Richardson correction. Used for the short
/// panels of cumulative integrals where a global uniform refinement wastes
/// work.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-13, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Five-point Gauss-Legendre rule on [a, b].
template <typename F>
double gauss5(F&& f, double a, double b) {
  static constexpr double x[5] = {0.0, 0.5384693101056831, -0.5384693101056831,
                                  0.9061798459386640, -0.9061798459386640};
  static constexpr double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                  0.2369268850561891, 0.2369268850561891};
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double acc = 0.0;
  for (int k = 0; k < 5; ++k) acc += w[k] * f(c + r * x[k]);
  return r * acc;
}

}  // namespace fblab
