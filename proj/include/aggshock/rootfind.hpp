#pragma once

#include <cmath>

#include "aggshock/errors.hpp"

namespace aggshock {

// Bisection; requires a sign change on [lo, hi]. Stops when the bracket
// width falls below xtol or |f| below ftol.
template <class F>
double bisect_root(F&& f, double lo, double hi, double xtol, double ftol = 0.0,
                   int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NoBracket("bisect_root: no sign change on the bracket");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::fabs(fm) <= ftol || (hi - lo) <= xtol) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return mid;
}

// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
double golden_section_minimize(F&& f, double lo, double hi, double xtol,
                               int max_iter = 400) {
  static const double invphi = 0.6180339887498948482;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace aggshock
