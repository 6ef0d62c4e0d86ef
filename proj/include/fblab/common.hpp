#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fblab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class PreconditionViolation : public Error {
public:
  using Error::Error;
};

class GeometryMismatch : public Error {
public:
  using Error::Error;
};

class InconclusiveClassification : public Error {
public:
  using Error::Error;
};

class InversionError : public Error {
public:
  using Error::Error;
};

class NonIntegrableTail : public Error {
public:
  using Error::Error;
};

class CurvatureSingularity : public Error {
public:
  using Error::Error;
};

constexpr double pi = std::numbers::pi;

template <typename T>
constexpr T sqr(const T& v) {
  return v * v;
}

/// Area of the unit k-sphere S^k in R^{k+1}; S^0 is two points.
inline double unit_sphere_area(int k) {
  const double m = 0.5 * (k + 1);
  return 2.0 * std::pow(pi, m) / std::tgamma(m);
}

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> k{1};
  return k;
}
}  // namespace detail

/// Number of worker threads used by the data-parallel kernels. One thread
/// is the default and gives bitwise reproducible runs; larger counts give
/// the same bits too because every reduction is done per row, then in row
/// order.
inline void set_threads(unsigned k) { detail::thread_setting() = std::max(1u, k); }
inline unsigned threads() { return detail::thread_setting(); }

/// Calls fn(row) for row in [0, rows), split in contiguous blocks.
template <typename Fn>
void parallel_rows(std::size_t rows, Fn&& fn) {
  const unsigned k = std::min<std::size_t>(threads(), std::max<std::size_t>(rows, 1));
  if (k <= 1) {
    for (std::size_t r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(k);
  const std::size_t block = (rows + k - 1) / k;
  for (unsigned w = 0; w < k; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(rows, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t r = lo; r < hi; ++r) fn(r);
    });
  }
  for (auto& t : pool) t.join();
}

/// Sum of per-row partials computed in parallel, reduced in row order.
template <typename Fn>
double ordered_row_sum(std::size_t rows, Fn&& row_value) {
  std::vector<double> partial(rows, 0.0);
  parallel_rows(rows, [&](std::size_t r) { partial[r] = row_value(r); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace fblab
