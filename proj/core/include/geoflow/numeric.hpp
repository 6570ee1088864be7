#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "geoflow/error.hpp"

namespace geoflow {

/// Exact arbitrary-precision rational used by the lattice backend.
using Rational = boost::multiprecision::cpp_rational;

template <typename T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

template <typename T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

template <Scalar T>
T from_rational(const Rational& x) {
  if constexpr (is_exact_v<T>) {
    return x;
  } else {
    return to_double(x);
  }
}

template <Scalar T>
T abs_value(const T& x) {
  if constexpr (is_exact_v<T>) {
    return x < 0 ? T(-x) : x;
  } else {
    return std::fabs(x);
  }
}

/// x^n by repeated squaring; exact for Rational.
template <Scalar T>
T pow_int(T base, long long n) {
  if (n < 0) {
    base = T(1) / base;
    n = -n;
  }
  T result(1);
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

/// Renders a rational as "p/q" (or "p" when the denominator is 1).
std::string format_rational(const Rational& x);

/// Parses "p/q", an integer, or a plain decimal ("0.125", "2.5e-3") exactly.
/// Throws Error(ErrorCode::Syntax) on malformed input.
Rational parse_rational(const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Row-major dense matrix; only what the chain and compact-block solvers need.
template <Scalar T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Solves A x = b by Gauss-Jordan elimination. Rational mode pivots on the
/// first nonzero entry and is exact; double mode uses partial pivoting.
/// Throws Error(ErrorCode::Singular) when A is singular.
template <Scalar T>
std::vector<T> solve_linear(Matrix<T> a, std::vector<T> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw Error(ErrorCode::Singular, "solve_linear: dimension mismatch");
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = n;
    if constexpr (is_exact_v<T>) {
      for (std::size_t r = col; r < n; ++r) {
        if (a(r, col) != 0) {
          pivot = r;
          break;
        }
      }
    } else {
      double best = 0.0;
      for (std::size_t r = col; r < n; ++r) {
        if (std::fabs(a(r, col)) > best) {
          best = std::fabs(a(r, col));
          pivot = r;
        }
      }
      if (best < 1e-300) pivot = n;
    }
    if (pivot == n) {
      throw Error(ErrorCode::Singular, "solve_linear: singular system");
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
      std::swap(b[pivot], b[col]);
    }
    const T inv = T(1) / a(col, col);
    for (std::size_t c = col; c < n; ++c) a(col, c) *= inv;
    b[col] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a(r, col) == 0) continue;
      const T factor = a(r, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      b[r] -= factor * b[col];
    }
  }
  return b;
}

}  // namespace geoflow
