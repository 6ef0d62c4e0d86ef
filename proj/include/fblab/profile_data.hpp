#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fblab/interp.hpp"

namespace fblab {

enum class ProfileCase {
  unclassified,
  constant,
  case_i,
  case_ii,
  case_iii,
  reflected_i,
  reflected_ii,
  reflected_iii,
};

inline std::string_view to_string(ProfileCase c) {
  switch (c) {
    case ProfileCase::constant: return "constant";
    case ProfileCase::case_i: return "case_i";
    case ProfileCase::case_ii: return "case_ii";
    case ProfileCase::case_iii: return "case_iii";
    case ProfileCase::reflected_i: return "reflected_i";
    case ProfileCase::reflected_ii: return "reflected_ii";
    case ProfileCase::reflected_iii: return "reflected_iii";
    default: return "unclassified";
  }
}

/// Sampled solution of the one-dimensional profile equation u'' = beta(u)/2.
struct Profile1D {
  std::vector<double> xs;
  std::vector<double> us;
  std::vector<double> dus;
  double slope_plus = std::numeric_limits<double>::quiet_NaN();
  double slope_minus = std::numeric_limits<double>::quiet_NaN();
  double turning_point = std::numeric_limits<double>::quiet_NaN();
  double min_value = std::numeric_limits<double>::quiet_NaN();
  ProfileCase case_tag = ProfileCase::unclassified;

  std::size_t size() const { return xs.size(); }

  /// Cubic Hermite interpolation from (u, u'); affine continuation outside
  /// the sampled range using the end slopes.
  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    if (x <= xs.front()) return us.front() + dus.front() * (x - xs.front());
    if (x >= xs.back()) return us.back() + dus.back() * (x - xs.back());
    return interpolant().operator()(x);
  }

  double slope(double x) const {
    if (x <= xs.front()) return dus.front();
    if (x >= xs.back()) return dus.back();
    return interpolant().derivative(x);
  }

  /// Rebuilds the interpolant; call after filling or editing the samples.
  void finalize() { curve_ = std::make_shared<const HermiteCubic>(xs, us, dus); }

  const HermiteCubic& interpolant() const {
    if (!curve_) throw InvalidParameter("Profile1D: finalize() must be called before evaluation");
    return *curve_;
  }

private:
  std::shared_ptr<const HermiteCubic> curve_;
};

}  // namespace fblab
