#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "aggshock/errors.hpp"

namespace aggshock {

// Row-major dense matrix. Everything here targets the small systems the
// estimators need (<= ~25x25); no attempt at blocking or BLAS.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  Matrix z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) z(i, j) += xik * y(k, j);
    }
  return z;
}

// LU with partial pivoting. cond_heuristic is the cheap max|U_ii|/min|U_ii|
// ratio; callers compare it against kConditionWarnThreshold.
inline constexpr double kConditionWarnThreshold = 1e12;

struct LuDecomp {
  Matrix lu;
  std::vector<int> piv;
  bool singular = false;
  double cond_heuristic = 0.0;
};

inline LuDecomp lu_factor(Matrix m) {
  const int n = m.rows;
  LuDecomp d;
  d.piv.resize(n);
  for (int i = 0; i < n; ++i) d.piv[i] = i;
  for (int col = 0; col < n; ++col) {
    int p = col;
    double best = std::fabs(m(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::fabs(m(r, col));
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best == 0.0) {
      d.singular = true;
      d.lu = std::move(m);
      d.cond_heuristic = std::numeric_limits<double>::infinity();
      return d;
    }
    if (p != col) {
      for (int j = 0; j < n; ++j) std::swap(m(col, j), m(p, j));
      std::swap(d.piv[col], d.piv[p]);
    }
    const double pivot = m(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = m(r, col) / pivot;
      m(r, col) = f;
      for (int j = col + 1; j < n; ++j) m(r, j) -= f * m(col, j);
    }
  }
  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double v = std::fabs(m(i, i));
    dmax = std::max(dmax, v);
    dmin = std::min(dmin, v);
  }
  d.cond_heuristic = (dmin > 0.0) ? dmax / dmin : std::numeric_limits<double>::infinity();
  d.lu = std::move(m);
  return d;
}

inline std::vector<double> lu_solve(const LuDecomp& d, const std::vector<double>& b) {
  const int n = d.lu.rows;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[d.piv[i]];
  for (int i = 1; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= d.lu(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= d.lu(i, j) * x[j];
    x[i] = s / d.lu(i, i);
  }
  return x;
}

inline Matrix lu_inverse(const LuDecomp& d) {
  const int n = d.lu.rows;
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = lu_solve(d, e);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations; used for the
// positive-semidefiniteness check on sandwich variance matrices.
inline std::vector<double> symmetric_eigenvalues(Matrix m) {
  const int n = m.rows;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  return ev;
}

}  // namespace aggshock
