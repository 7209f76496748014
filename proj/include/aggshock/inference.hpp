#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/ge_estimation.hpp"
#include "aggshock/matrix.hpp"
#include "aggshock/normal.hpp"
#include "aggshock/numdiff.hpp"

namespace aggshock {

// Critical value pinned for two-sided 90% intervals.
constexpr double kCritical90 = 1.645;

struct SandwichResult {
  Matrix A;  // 9x9 Jacobian of the averaged moments
  Matrix W;  // block-diagonal variance of the averaged moments
  Matrix V;  // sandwich, symmetrized
  std::vector<double> se;
  double jacobian_cond = 0.0;

  std::pair<double, double> ci_90(int j, double phi_hat_j) const {
    const double half = kCritical90 * se[j];
    return {phi_hat_j - half, phi_hat_j + half};
  }
};

// Closed intervals: the boundary counts as covered.
inline bool coverage_indicator(const std::pair<double, double>& ci, double true_value) {
  return true_value >= ci.first && true_value <= ci.second;
}

// Two-sample sandwich: micro moments averaged over n individuals, aggregate
// AR moments averaged over tau adjacent pairs, each block scaled by its own
// sample size. Aggregates are held fixed as data throughout.
inline SandwichResult sandwich(const Economy& e, const GEEstimate& est,
                               ThetaPolicy policy) {
  const int n = e.wave1.size();
  const int pairs = static_cast<int>(est.nu_hat.size()) - 1;
  const std::vector<double> phi = est.as_phi();

  SandwichResult out;
  out.A = numeric_jacobian(
      [&](const std::vector<double>& p) { return ge_stacked_moments(p, e, policy); },
      phi, 9);

  GEMomentContext ctx;
  ctx.w1F_agg = std::exp(e.agg.log_wF_agg[1]);
  ctx.prob_F = 1.0 - std_normal_cdf(std::log(1.0 - est.theta_hat) - est.mu);

  Matrix omega_f(7, 7);
  double f[7];
  for (int i = 0; i < n; ++i) {
    cross_moment(phi, e, ctx, i, f);
    for (int a = 0; a < 7; ++a)
      for (int b = a; b < 7; ++b) omega_f(a, b) += f[a] * f[b];
  }
  for (int a = 0; a < 7; ++a)
    for (int b = a; b < 7; ++b) {
      omega_f(a, b) /= n;
      omega_f(b, a) = omega_f(a, b);
    }

  Matrix omega_g(2, 2);
  double g[2];
  for (int t = 0; t < pairs; ++t) {
    time_moment(phi, est.nu_hat[t], est.nu_hat[t + 1], g);
    omega_g(0, 0) += g[0] * g[0];
    omega_g(0, 1) += g[0] * g[1];
    omega_g(1, 1) += g[1] * g[1];
  }
  omega_g(0, 0) /= pairs;
  omega_g(0, 1) /= pairs;
  omega_g(1, 1) /= pairs;
  omega_g(1, 0) = omega_g(0, 1);

  out.W = Matrix(9, 9);
  for (int a = 0; a < 7; ++a)
    for (int b = 0; b < 7; ++b) out.W(a, b) = omega_f(a, b) / n;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out.W(7 + a, 7 + b) = omega_g(a, b) / pairs;

  auto lu = lu_factor(out.A);
  if (lu.singular) throw SingularJacobian("moment Jacobian is numerically singular");
  out.jacobian_cond = lu.cond_heuristic;
  const Matrix a_inv = lu_inverse(lu);
  const Matrix v_raw = matmul(matmul(a_inv, out.W), transpose(a_inv));
  out.V = Matrix(9, 9);
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) out.V(a, b) = 0.5 * (v_raw(a, b) + v_raw(b, a));
  out.se.resize(9);
  for (int j = 0; j < 9; ++j) out.se[j] = std::sqrt(std::max(out.V(j, j), 0.0));
  return out;
}

// Delta-method standard error for the labor-demand slope, a ratio of the
// observed employment gap to the estimated wage-mean gap (columns 1, 2).
inline double alpha1_se(const GEEstimate& est, const SandwichResult& sw) {
  const double gap = est.delta1 - est.delta2;
  const double g1 = -est.alpha1 / gap;
  const double g2 = est.alpha1 / gap;
  const double var =
      g1 * g1 * sw.V(1, 1) + 2.0 * g1 * g2 * sw.V(1, 2) + g2 * g2 * sw.V(2, 2);
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace aggshock
