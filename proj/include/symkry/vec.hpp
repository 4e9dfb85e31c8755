#pragma once

// Small dense vector / matrix helpers shared by the solver, oracle and
// diagnostics code.  Everything is plain std::vector<double>; none of the
// hot paths here are large enough to justify an external linear algebra
// dependency.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace symkry {

using Vec = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("dot: size mismatch " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// y += a*x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vec scaled(const Vec& x, double a) {
  Vec y = x;
  scale(a, y);
  return y;
}

inline Vec add(const Vec& x, const Vec& y) {
  Vec z = x;
  axpy(1.0, y, z);
  return z;
}

inline Vec sub(const Vec& x, const Vec& y) {
  Vec z = x;
  axpy(-1.0, y, z);
  return z;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Dense row-major matrix.  Used by the oracle, the Matrix Market reader and
// the diagnostics Gram computations; solvers only ever see operators.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Vec matvec(const Matrix& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.cols)
    throw std::invalid_argument("matvec: size mismatch");
  Vec y(static_cast<std::size_t>(m.rows), 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = &m.a[static_cast<std::size_t>(i) * m.cols];
    for (int j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double xv = x(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) z(i, j) += xv * y(k, j);
    }
  return z;
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double e : m.a) v = std::max(v, std::abs(e));
  return v;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double e : m.a) s += e * e;
  return std::sqrt(s);
}

}  // namespace symkry
