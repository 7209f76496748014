#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/matrix.hpp"
#include "aggshock/ols.hpp"
#include "aggshock/rng.hpp"
#include "aggshock/rootfind.hpp"

namespace aggshock {

// Firm panel with productivity omega_{j,t} = nu_t + eps_{j,t}: an aggregate
// AR(1) component shared by all firms plus an idiosyncratic AR(1).
struct ProductionParams {
  double beta0 = 0.2, beta_l = 0.6, beta_k = 0.4;
  double dep = 0.1;            // capital depreciation
  double rho_eps = 0.7;        // persistence of idiosyncratic eps
  double sigma_zeta_sq = 0.1;  // innovation variance of eps
  double varrho_nu = 0.7;      // aggregate AR(1) persistence
  double omega_nu_sq = 0.2;    // aggregate innovation variance
  double sigma_eta_sq = 0.05;  // measurement error on output
  // investment policy i = exp(a0 + a1*omega + a2*k); a1 > 0 so the policy is
  // invertible in omega at every capital level
  double a0 = -1.0, a1 = 0.8, a2 = -0.1;
  // labor policy l = b0 + b1*omega + b2*k + N(0, labor_noise_sq)
  double b0 = 0.5, b1 = 0.6, b2 = 0.3;
  double labor_noise_sq = 0.01;
};

// Period-major layout: index (j, t) lives at t*J + j.
struct FirmPanel {
  int J = 0, T = 0;
  std::vector<double> y, l, k, i;
  std::vector<double> eps;  // latent idiosyncratic component, oracle use only
  std::vector<double> nu;   // latent aggregate series, length T
  ProductionParams params;

  int idx(int j, int t) const { return t * J + j; }
};

inline FirmPanel simulate_firm_panel(const ProductionParams& p, int J, int T,
                                     RngStream& rng) {
  if (J < 50 || T < 3) throw DomainError("panel needs J >= 50 and T >= 3");
  if (p.a1 <= 0) throw DomainError("investment policy must be increasing in omega");
  const int burn = 3;
  const int total = T + burn;
  FirmPanel panel;
  panel.J = J;
  panel.T = T;
  panel.params = p;
  const size_t cells = static_cast<size_t>(J) * T;
  panel.y.resize(cells);
  panel.l.resize(cells);
  panel.k.resize(cells);
  panel.i.resize(cells);
  panel.eps.resize(cells);
  panel.nu.resize(T);

  const double sd_xi = std::sqrt(p.omega_nu_sq);
  const double sd_nu0 = std::sqrt(p.omega_nu_sq / (1.0 - p.varrho_nu * p.varrho_nu));
  std::vector<double> nu_sim(total);
  double prev = sd_nu0 * rng.normal();
  for (int s = 0; s < total; ++s) {
    nu_sim[s] = p.varrho_nu * prev + sd_xi * rng.normal();
    prev = nu_sim[s];
  }
  for (int t = 0; t < T; ++t) panel.nu[t] = nu_sim[burn + t];

  const double sd_zeta = std::sqrt(p.sigma_zeta_sq);
  const double sd_eps0 = std::sqrt(p.sigma_zeta_sq / (1.0 - p.rho_eps * p.rho_eps));
  const double sd_lnoise = std::sqrt(p.labor_noise_sq);
  const double sd_eta = std::sqrt(p.sigma_eta_sq);
  std::vector<double> zeta(total - 1), lnoise(T), eta(T);
  for (int j = 0; j < J; ++j) {
    // fixed per-firm draw layout keeps replications reproducible
    double eps = sd_eps0 * rng.normal();
    for (auto& z : zeta) z = sd_zeta * rng.normal();
    double kap = 2.8 + 0.3 * rng.normal();
    for (auto& z : lnoise) z = sd_lnoise * rng.normal();
    for (auto& z : eta) z = sd_eta * rng.normal();

    for (int s = 0; s < total; ++s) {
      if (s > 0) eps = p.rho_eps * eps + zeta[s - 1];
      const double omega = nu_sim[s] + eps;
      const double inv = std::exp(p.a0 + p.a1 * omega + p.a2 * kap);
      if (s >= burn) {
        const int t = s - burn;
        const int at = panel.idx(j, t);
        const double lab = p.b0 + p.b1 * omega + p.b2 * kap + lnoise[t];
        panel.k[at] = kap;
        panel.i[at] = inv;
        panel.l[at] = lab;
        panel.y[at] = p.beta0 + p.beta_l * lab + p.beta_k * kap + omega + eta[t];
        panel.eps[at] = eps;
      }
      kap = (1.0 - p.dep) * kap + inv;
    }
  }
  return panel;
}

// Exponent pairs (a, b) with a + b <= degree for terms i^a * k^b, constant first.
inline std::vector<std::pair<int, int>> bivariate_powers(int degree) {
  std::vector<std::pair<int, int>> out;
  for (int s = 0; s <= degree; ++s)
    for (int a = s; a >= 0; --a) out.emplace_back(a, s - a);
  return out;
}

struct FirstStage {
  double beta_l_hat = 0;
  std::vector<double> beta_l_t, var_t;  // per-period coefficient and its variance
  std::vector<double> phi_hat;          // per-cell polynomial fit, layout as panel
};

// Period-by-period partially linear regressions: y on l plus a full bivariate
// polynomial in (i, k). The labor coefficient is pooled by inverse variance;
// the polynomial part is refit per period at the pooled coefficient so the
// composite productivity proxy is consistent with it.
inline FirstStage first_stage(const FirmPanel& panel, int poly_degree) {
  if (poly_degree < 2) throw DomainError("first stage needs polynomial degree >= 2");
  const auto powers = bivariate_powers(poly_degree);
  const int J = panel.J, T = panel.T;
  const int kpoly = static_cast<int>(powers.size());
  FirstStage out;
  out.beta_l_t.resize(T);
  out.var_t.resize(T);
  out.phi_hat.resize(static_cast<size_t>(J) * T);

  Matrix x(J, 1 + kpoly);
  std::vector<double> y(J);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const int at = panel.idx(j, t);
      x(j, 0) = panel.l[at];
      for (int c = 0; c < kpoly; ++c)
        x(j, 1 + c) =
            std::pow(panel.i[at], powers[c].first) * std::pow(panel.k[at], powers[c].second);
      y[j] = panel.y[at];
    }
    const OlsFit fit = ols(x, y);
    out.beta_l_t[t] = fit.coef[0];
    out.var_t[t] = fit.coef_var(0);
  }
  double wsum = 0, bsum = 0;
  for (int t = 0; t < T; ++t) {
    const double w = 1.0 / out.var_t[t];
    wsum += w;
    bsum += w * out.beta_l_t[t];
  }
  out.beta_l_hat = bsum / wsum;

  Matrix xp(J, kpoly);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const int at = panel.idx(j, t);
      for (int c = 0; c < kpoly; ++c)
        xp(j, c) =
            std::pow(panel.i[at], powers[c].first) * std::pow(panel.k[at], powers[c].second);
      y[j] = panel.y[at] - out.beta_l_hat * panel.l[at];
    }
    const OlsFit fit = ols(xp, y);
    for (int j = 0; j < J; ++j) {
      double v = 0;
      for (int c = 0; c < kpoly; ++c) v += fit.coef[c] * xp(j, c);
      out.phi_hat[panel.idx(j, t)] = v;
    }
  }
  return out;
}

// The shortcut this module exists to expose: one pooled regression where
// additive period dummies stand in for the per-period polynomial. The dummies
// absorb the level of the aggregate shock but not its interaction with the
// policy inversion, so the labor coefficient stays contaminated.
inline double first_stage_additive_dummies(const FirmPanel& panel, int poly_degree) {
  if (poly_degree < 2) throw DomainError("first stage needs polynomial degree >= 2");
  const auto powers = bivariate_powers(poly_degree);
  const int J = panel.J, T = panel.T;
  const int kpoly = static_cast<int>(powers.size()) - 1;  // constant -> dummies
  Matrix x(J * T, 1 + T + kpoly);
  std::vector<double> y(static_cast<size_t>(J) * T);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      const int at = panel.idx(j, t);
      const int row = t * J + j;
      x(row, 0) = panel.l[at];
      for (int d = 0; d < T; ++d) x(row, 1 + d) = d == t ? 1.0 : 0.0;
      for (int c = 0; c < kpoly; ++c)
        x(row, 1 + T + c) = std::pow(panel.i[at], powers[c + 1].first) *
                            std::pow(panel.k[at], powers[c + 1].second);
      y[row] = panel.y[at];
    }
  return ols(x, y).coef[0];
}

namespace prod_detail {

// SSR of the second-stage residual at a candidate capital coefficient.
// g is a univariate polynomial in the lagged proxy, fit pooled across period
// pairs or separately per pair.
inline double second_stage_ssr(const FirmPanel& panel, double beta_l_hat,
                               const std::vector<double>& phi_hat, int g_degree,
                               bool time_varying_g, double beta_k) {
  const int J = panel.J, T = panel.T;
  const int kg = g_degree + 1;
  const int pairs = T - 1;
  auto fill = [&](Matrix& x, std::vector<double>& dep, int t, int row0) {
    for (int j = 0; j < J; ++j) {
      const int at = panel.idx(j, t);
      const int at1 = panel.idx(j, t + 1);
      const double u = phi_hat[at] - beta_k * panel.k[at];
      double pw = 1.0;
      for (int c = 0; c < kg; ++c) {
        x(row0 + j, c) = pw;
        pw *= u;
      }
      dep[row0 + j] =
          panel.y[at1] - beta_l_hat * panel.l[at1] - beta_k * panel.k[at1];
    }
  };
  if (time_varying_g) {
    double ssr = 0;
    Matrix x(J, kg);
    std::vector<double> dep(J);
    for (int t = 0; t < pairs; ++t) {
      fill(x, dep, t, 0);
      ssr += ols(x, dep).rss;
    }
    return ssr;
  }
  Matrix x(J * pairs, kg);
  std::vector<double> dep(static_cast<size_t>(J) * pairs);
  for (int t = 0; t < pairs; ++t) fill(x, dep, t, t * J);
  return ols(x, dep).rss;
}

}  // namespace prod_detail

// Outer minimization over the capital coefficient by golden section, widening
// the bracket when the minimizer presses against an endpoint.
inline double second_stage(const FirmPanel& panel, double beta_l_hat,
                           const std::vector<double>& phi_hat, int g_degree,
                           bool time_varying_g) {
  if (g_degree < 1) throw DomainError("second stage needs g degree >= 1");
  auto ssr = [&](double bk) {
    return prod_detail::second_stage_ssr(panel, beta_l_hat, phi_hat, g_degree,
                                         time_varying_g, bk);
  };
  double lo = panel.params.beta_k - 1.0;
  double hi = panel.params.beta_k + 1.0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 8) throw NoBracket("second stage: no interior minimum found");
    const double bk = golden_section_minimize(ssr, lo, hi, 1e-7);
    const double width = hi - lo;
    if (bk - lo < 0.02 * width) {
      lo -= width;
      continue;
    }
    if (hi - bk < 0.02 * width) {
      hi += width;
      continue;
    }
    return bk;
  }
}

}  // namespace aggshock
