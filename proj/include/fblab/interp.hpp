#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fblab/common.hpp"

namespace fblab {

/// Index k with xs[k] <= x < xs[k+1], clamped to a valid interval.
inline std::size_t locate(std::span<const double> xs, double x) {
  if (xs.size() < 2) return 0;
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::ptrdiff_t k = std::distance(xs.begin(), it) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(xs.size()) - 2));
}

/// Piecewise cubic Hermite interpolant with given nodal slopes. Also supplies
/// the exact derivative and the exact antiderivative of the cubic pieces.
class HermiteCubic {
public:
  HermiteCubic() = default;
  HermiteCubic(std::vector<double> xs, std::vector<double> ys, std::vector<double> ds)
      : xs_(std::move(xs)), ys_(std::move(ys)), ds_(std::move(ds)) {
    if (xs_.size() < 2 || ys_.size() != xs_.size() || ds_.size() != xs_.size())
      throw InvalidParameter("HermiteCubic: need at least two nodes with matching sizes");
    for (std::size_t k = 1; k < xs_.size(); ++k)
      if (!(xs_[k] > xs_[k - 1])) throw InvalidParameter("HermiteCubic: abscissae must increase");
    cumulative_.assign(xs_.size(), 0.0);
    for (std::size_t k = 1; k < xs_.size(); ++k)
      cumulative_[k] = cumulative_[k - 1] + piece_integral(k - 1, xs_[k]);
  }

  double front() const { return xs_.front(); }
  double back() const { return xs_.back(); }
  std::span<const double> nodes() const { return xs_; }
  std::span<const double> values() const { return ys_; }
  std::span<const double> slopes() const { return ds_; }

  double operator()(double x) const {
    const std::size_t k = locate(xs_, x);
    const double h = xs_[k + 1] - xs_[k];
    const double u = (x - xs_[k]) / h;
    const double h00 = (1 + 2 * u) * sqr(1 - u);
    const double h10 = u * sqr(1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    return h00 * ys_[k] + h * h10 * ds_[k] + h01 * ys_[k + 1] + h * h11 * ds_[k + 1];
  }

  double derivative(double x) const {
    const std::size_t k = locate(xs_, x);
    const double h = xs_[k + 1] - xs_[k];
    const double u = (x - xs_[k]) / h;
    const double d00 = 6 * u * (u - 1) / h;
    const double d10 = (1 - u) * (1 - 3 * u);
    const double d01 = -d00;
    const double d11 = u * (3 * u - 2);
    return d00 * ys_[k] + d10 * ds_[k] + d01 * ys_[k + 1] + d11 * ds_[k + 1];
  }

  double second_derivative(double x) const {
    const std::size_t k = locate(xs_, x);
    const double h = xs_[k + 1] - xs_[k];
    const double u = (x - xs_[k]) / h;
    const double e00 = (12 * u - 6) / (h * h);
    const double e10 = (6 * u - 4) / h;
    const double e11 = (6 * u - 2) / h;
    return e00 * ys_[k] + e10 * ds_[k] - e00 * ys_[k + 1] + e11 * ds_[k + 1];
  }

  /// Integral from the first node to x (x clamped to the node range).
  double integral(double x) const {
    x = std::clamp(x, xs_.front(), xs_.back());
    const std::size_t k = locate(xs_, x);
    return cumulative_[k] + piece_integral(k, x);
  }

private:
  double piece_integral(std::size_t k, double x) const {
    const double h = xs_[k + 1] - xs_[k];
    const double u = (x - xs_[k]) / h;
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
    const double i00 = u - u3 + 0.5 * u4;
    const double i10 = 0.5 * u2 - 2.0 * u3 / 3.0 + 0.25 * u4;
    const double i01 = u3 - 0.5 * u4;
    const double i11 = 0.25 * u4 - u3 / 3.0;
    return h * (i00 * ys_[k] + h * i10 * ds_[k] + i01 * ys_[k + 1] + h * i11 * ds_[k + 1]);
  }

  std::vector<double> xs_, ys_, ds_, cumulative_;
};

/// Fritsch-Carlson slopes: the resulting Hermite cubic is monotone on every
/// interval where the data are monotone.
inline std::vector<double> monotone_slopes(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t m = xs.size();
  std::vector<double> d(m, 0.0);
  if (m < 2) return d;
  std::vector<double> delta(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) delta[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
  if (m == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      d[k] = 0.0;
    } else {
      const double h0 = xs[k] - xs[k - 1];
      const double h1 = xs[k + 1] - xs[k];
      const double w1 = 2 * h1 + h0;
      const double w2 = h1 + 2 * h0;
      d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  auto end_slope = [](double h0, double h1, double del0, double del1) {
    double s = ((2 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (s * del0 <= 0.0) s = 0.0;
    else if (del0 * del1 <= 0.0 && std::abs(s) > std::abs(3 * del0)) s = 3 * del0;
    return s;
  };
  d[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], delta[0], delta[1]);
  d[m - 1] = end_slope(xs[m - 1] - xs[m - 2], xs[m - 2] - xs[m - 3], delta[m - 2], delta[m - 3]);
  return d;
}

inline HermiteCubic monotone_cubic(std::vector<double> xs, std::vector<double> ys) {
  auto d = monotone_slopes(xs, ys);
  return HermiteCubic(std::move(xs), std::move(ys), std::move(d));
}

/// Derivative at xs[k] of the Lagrange polynomial through up to five
/// neighbouring nodes (fourth order on smooth data, any spacing).
inline double local_derivative(std::span<const double> xs, std::span<const double> ys, std::size_t k) {
  const std::size_t m = xs.size();
  const std::size_t width = std::min<std::size_t>(5, m);
  std::size_t lo = k >= width / 2 ? k - width / 2 : 0;
  if (lo + width > m) lo = m - width;
  double deriv = 0.0;
  const double x = xs[k];
  for (std::size_t j = lo; j < lo + width; ++j) {
    // d/dx of the j-th Lagrange basis polynomial at x.
    double denom = 1.0;
    for (std::size_t i = lo; i < lo + width; ++i)
      if (i != j) denom *= xs[j] - xs[i];
    double num = 0.0;
    for (std::size_t i = lo; i < lo + width; ++i) {
      if (i == j) continue;
      double prod = 1.0;
      for (std::size_t l = lo; l < lo + width; ++l)
        if (l != j && l != i) prod *= x - xs[l];
      num += prod;
    }
    deriv += ys[j] * num / denom;
  }
  return deriv;
}

}  // namespace fblab
