#pragma once

#include <cmath>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/matrix.hpp"

namespace aggshock {

// Least squares by Householder QR on a column-equilibrated copy of the
// design. QR keeps the poly-in-(i,k) designs well behaved where normal
// equations would start losing digits.
struct OlsFit {
  std::vector<double> coef;
  std::vector<double> resid;
  double rss = 0.0;
  int n = 0;
  int k = 0;

  double sigma2() const { return rss / static_cast<double>(n - k); }

  // Var(coef[j]) under homoskedastic errors: sigma2 * [(X'X)^{-1}]_{jj}
  double coef_var(int j) const {
    std::vector<double> v(k, 0.0);
    v[j] = 1.0;
    // solve R' u = e_j (forward substitution on the stored upper factor)
    for (int i = 0; i < k; ++i) {
      double s = v[i];
      for (int p = 0; p < i; ++p) s -= r_(p, i) * v[p];
      v[i] = s / r_(i, i);
    }
    double q = 0.0;
    for (int i = 0; i < k; ++i) q += v[i] * v[i];
    return sigma2() * q / (scale_[j] * scale_[j]);
  }

  Matrix r_;                    // upper-triangular factor of the scaled design
  std::vector<double> scale_;   // column scales applied before factorization
};

inline OlsFit ols(const Matrix& x, const std::vector<double>& y) {
  const int n = x.rows;
  const int k = x.cols;
  if (n < k) throw SingularDesign("ols: fewer observations than regressors");

  Matrix a = x;
  std::vector<double> scale(k, 1.0);
  for (int j = 0; j < k; ++j) {
    double norm = 0.0;
    for (int i = 0; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw SingularDesign("ols: zero column in design");
    scale[j] = norm;
    for (int i = 0; i < n; ++i) a(i, j) /= norm;
  }

  std::vector<double> b = y;
  // Householder factorization, applying reflectors to b as we go
  for (int j = 0; j < k; ++j) {
    double norm = 0.0;
    for (int i = j; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw SingularDesign("ols: rank-deficient design");
    if (a(j, j) < 0.0) norm = -norm;
    for (int i = j; i < n; ++i) a(i, j) /= norm;
    a(j, j) += 1.0;
    for (int c = j + 1; c < k; ++c) {
      double s = 0.0;
      for (int i = j; i < n; ++i) s += a(i, j) * a(i, c);
      s = -s / a(j, j);
      for (int i = j; i < n; ++i) a(i, c) += s * a(i, j);
    }
    double s = 0.0;
    for (int i = j; i < n; ++i) s += a(i, j) * b[i];
    s = -s / a(j, j);
    for (int i = j; i < n; ++i) b[i] += s * a(i, j);
    a(j, j) = norm;  // diag stores R_jj; below-diag holds the reflector
  }

  OlsFit fit;
  fit.n = n;
  fit.k = k;
  fit.scale_ = scale;
  fit.r_ = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) fit.r_(i, j) = a(i, j);

  std::vector<double> c(k);
  for (int i = k - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < k; ++j) s -= fit.r_(i, j) * c[j];
    c[i] = s / fit.r_(i, i);
  }
  fit.coef.resize(k);
  for (int j = 0; j < k; ++j) fit.coef[j] = c[j] / scale[j];

  fit.resid.resize(n);
  for (int i = 0; i < n; ++i) {
    double yhat = 0.0;
    for (int j = 0; j < k; ++j) yhat += x(i, j) * fit.coef[j];
    fit.resid[i] = y[i] - yhat;
    fit.rss += fit.resid[i] * fit.resid[i];
  }
  return fit;
}

}  // namespace aggshock
