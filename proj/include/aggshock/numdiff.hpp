#pragma once

#include <cmath>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/matrix.hpp"

namespace aggshock {

// Central-difference Jacobian of f: R^m -> R^k. Step per coordinate is
// h = h_rel * max(1, |x_j|). Returns k x m.
template <class F>
Matrix numeric_jacobian(F&& f, std::vector<double> x, int k_out, double h_rel = 1e-6) {
  const int m = static_cast<int>(x.size());
  Matrix jac(k_out, m);
  for (int j = 0; j < m; ++j) {
    const double xj = x[j];
    const double h = h_rel * std::max(1.0, std::fabs(xj));
    x[j] = xj + h;
    const std::vector<double> fp = f(x);
    x[j] = xj - h;
    const std::vector<double> fm = f(x);
    x[j] = xj;
    for (int i = 0; i < k_out; ++i) {
      if (!std::isfinite(fp[i]) || !std::isfinite(fm[i]))
        throw EvaluationError("numeric_jacobian: non-finite function value");
      jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
  }
  return jac;
}

}  // namespace aggshock
