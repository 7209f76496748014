#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/rng.hpp"
#include "aggshock/rootfind.hpp"

namespace aggshock {

// CARA portfolio-choice economy: one safe and one risky asset, the risky
// return shares an aggregate component nu_1 across all investors at t=1.
struct PortfolioParams {
  double delta = 2.0;           // risk aversion
  double r = 0.02;              // risk-free return
  double mu = 0.22;             // mean aggregate return
  double sigma_nu_sq = 0.0025;  // aggregate-shock variance
  double sigma_eps_sq = 0.05;   // idiosyncratic return variance
  double sigma_e_sq = 0.01;     // share measurement-error variance

  double sigma_sq() const { return sigma_nu_sq + sigma_eps_sq; }
};

inline double optimal_share(const PortfolioParams& p) {
  const double ds = p.delta * p.sigma_sq();
  if (ds == 0.0) throw DomainError("optimal_share: delta * sigma_sq is zero");
  return (ds + p.r - p.mu) / ds;
}

struct PortfolioCrossSection {
  double nu_1 = 0.0;             // realized aggregate return component
  std::vector<double> u;         // risky returns u_i = nu_1 + eps_i
  std::vector<double> alpha_obs; // observed shares alpha + e_i
};

inline PortfolioCrossSection simulate_cross_section(const PortfolioParams& p, int n,
                                                    RngStream& rng) {
  const double alpha = optimal_share(p);
  PortfolioCrossSection cs;
  cs.nu_1 = rng.normal(p.mu, std::sqrt(p.sigma_nu_sq));
  cs.u.resize(n);
  cs.alpha_obs.resize(n);
  const double sd_eps = std::sqrt(p.sigma_eps_sq);
  const double sd_e = std::sqrt(p.sigma_e_sq);
  for (int i = 0; i < n; ++i) cs.u[i] = cs.nu_1 + sd_eps * rng.normal();
  for (int i = 0; i < n; ++i) cs.alpha_obs[i] = alpha + sd_e * rng.normal();
  return cs;
}

// i.i.d. aggregate-return series observed by the two-step estimator
inline std::vector<double> simulate_nu_series(const PortfolioParams& p, int tau,
                                              RngStream& rng) {
  std::vector<double> nu(tau);
  const double sd = std::sqrt(p.sigma_nu_sq);
  for (int t = 0; t < tau; ++t) nu[t] = rng.normal(p.mu, sd);
  return nu;
}

namespace detail {
inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
inline double variance(const std::vector<double>& v) {  // divisor n (moment convention)
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}
}  // namespace detail

// Cross-section-only method of moments; inconsistent under aggregate shocks
// because the sample mean of u converges to nu_1, not mu.
inline double naive_mm_estimate(const PortfolioCrossSection& cs, double r) {
  const double u_bar = detail::mean(cs.u);
  const double s2 = detail::variance(cs.u);
  const double a_bar = detail::mean(cs.alpha_obs);
  if (s2 == 0.0 || a_bar == 1.0)
    throw DegenerateSample("naive_mm_estimate: zero return variance or mean share 1");
  return (u_bar - r) / (s2 * (1.0 - a_bar));
}

// Root of the empirical Euler FOC in delta. Consumption follows the budget
// constraint with the common optimal share.
inline double euler_foc_estimate(const PortfolioCrossSection& cs,
                                 const PortfolioParams& p) {
  const double alpha = optimal_share(p);
  const int n = static_cast<int>(cs.u.size());
  std::vector<double> c(n);
  double c_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    c[i] = 1.0 + alpha * p.r + (1.0 - alpha) * cs.u[i];
    c_min = std::min(c_min, c[i]);
  }
  // scaling by exp(delta*c_min) > 0 keeps the exponentials bounded without
  // moving the root
  auto foc = [&](double delta) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(-delta * (c[i] - c_min)) * (p.r - cs.u[i]);
    return s / static_cast<double>(n);
  };
  try {
    return bisect_root(foc, 1e-4, 100.0, 1e-10);
  } catch (const NoBracket&) {
    throw NoBracket("euler_foc_estimate: FOC has no root in [1e-4, 100]");
  }
}

struct TwoStepEstimate {
  double delta_hat = 0.0;
  double mu_hat = 0.0;
  double sigma_nu_sq_hat = 0.0;
  double sigma_eps_sq_hat = 0.0;
  double alpha_bar = 0.0;
};

// Consistent estimator: aggregate moments from the time series, idiosyncratic
// ones from the cross-section.
inline TwoStepEstimate two_step_estimate(const PortfolioCrossSection& cs,
                                         const std::vector<double>& nu_series,
                                         double r) {
  TwoStepEstimate e;
  e.mu_hat = detail::mean(nu_series);
  e.sigma_nu_sq_hat = detail::variance(nu_series);
  e.sigma_eps_sq_hat = detail::variance(cs.u);
  e.alpha_bar = detail::mean(cs.alpha_obs);
  if (e.alpha_bar == 1.0) throw DegenerateSample("two_step_estimate: mean share 1");
  e.delta_hat =
      (e.mu_hat - r) / ((e.sigma_eps_sq_hat + e.sigma_nu_sq_hat) * (1.0 - e.alpha_bar));
  return e;
}

// Asymptotic variance of sqrt(n)(delta_hat - delta) for the two-step
// estimator with kappa = lim n/tau.
inline double asymptotic_variance(const PortfolioParams& p, double kappa) {
  const double alpha = optimal_share(p);
  if (alpha == 1.0) throw DomainError("asymptotic_variance: alpha = 1");
  const double one_m_a = 1.0 - alpha;
  const double prem = p.mu - p.r;
  const double s2 = p.sigma_eps_sq + p.sigma_nu_sq;
  const double num = 2.0 * one_m_a * one_m_a * prem * prem *
                         (p.sigma_eps_sq + kappa * p.sigma_nu_sq) +
                     s2 * s2 * (prem * prem * p.sigma_e_sq +
                                one_m_a * one_m_a * kappa * p.sigma_nu_sq);
  const double den = one_m_a * one_m_a * one_m_a * one_m_a * s2 * s2 * s2 * s2;
  return num / den;
}

}  // namespace aggshock
