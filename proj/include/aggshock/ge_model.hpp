#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/normal.hpp"
#include "aggshock/rng.hpp"
#include "aggshock/rootfind.hpp"

namespace aggshock {

// Overlapping-generations economy with two education types (F flexible,
// R rigid), an AR(1) aggregate shock hitting the R sector, and Cobb-Douglas
// preferences over consumption and leisure.
struct GEParams {
  double mu = 0.2;          // mean of log risk aversion, log gamma_i ~ N(mu, 1)
  double varrho = 0.75;     // AR(1) persistence of the log aggregate shock
  double omega_sq = 0.48;   // AR(1) innovation variance
  double sigma_F_sq = 1.0;  // productivity-shock variance, F sector
  double sigma_R_sq = 1.4;  // productivity-shock variance, R sector
  double sigma = 0.6;       // consumption share in utility
  double alpha0 = 7.0;      // labor-demand intercept
  double alpha1 = -1.0;     // labor-demand slope (< 0)
  double time_endowment = 1.0;
  double discount = 1.0;    // cancels out of the education choice; carried only
};

// Standardized index inside the education-choice probability
// 1 - Phi(log(1 - Theta) - mu); must stay below 1 for the log to exist.
inline double ge_theta(const GEParams& p, double log_nF_over_nR, double log_nu_t) {
  const double den =
      p.sigma * (p.sigma_R_sq - p.sigma_F_sq + p.omega_sq) / (2.0 * p.alpha1);
  if (den == 0.0) throw DomainError("ge_theta: zero denominator");
  const double num =
      log_nF_over_nR + 0.5 * (p.sigma_R_sq - p.sigma_F_sq) + p.varrho * log_nu_t;
  return num / den;
}

inline bool chooses_F(double gamma_i, double theta_t) { return gamma_i >= 1.0 - theta_t; }

namespace ge_detail {
// Choice probability at a given Theta; values >= 1 are evaluated at the
// censoring point 1 - 1e-9 so the solver's residual stays defined off the
// equilibrium path.
inline double choice_probability(const GEParams& p, double theta) {
  const double t = std::min(theta, 1.0 - 1e-9);
  return 1.0 - std_normal_cdf(std::log(1.0 - t) - p.mu);
}
}  // namespace ge_detail

// Rational-expectations education share: the fraction p choosing F when the
// sector measures inside Theta are the ones this very choice generates.
inline double fraction_choosing_F(const GEParams& p, double log_nu_t) {
  const double p_min = 1e-6;
  auto residual = [&](double q) {
    const double theta = ge_theta(p, std::log(q / (1.0 - q)), log_nu_t);
    return q - ge_detail::choice_probability(p, theta);
  };
  try {
    return bisect_root(residual, p_min, 1.0 - p_min, 1e-13, 1e-12, 100);
  } catch (const NoBracket&) {
    throw NoFixedPoint("fraction_choosing_F: no sign change on [1e-6, 1-1e-6]");
  }
}

// Log wages per effective labor unit clearing both sector labor markets.
inline std::pair<double, double> equilibrium_log_wages(const GEParams& p, double n_F,
                                                       double n_R, double log_nu_t) {
  const double common = std::log(p.sigma) + std::log(p.time_endowment) - p.alpha0;
  const double log_wF_agg = (std::log(n_F) + common) / p.alpha1;
  const double log_wR_agg = (std::log(n_R) + common - log_nu_t) / p.alpha1;
  return {log_wF_agg, log_wR_agg};
}

// Aggregate series for periods t = 0..tau. Education is chosen one period
// ahead, so n_F at t solves the fixed point at the period t-1 shock; the
// extra period 0 carries the education state behind wave 1.
struct AggregatePath {
  std::vector<double> log_nu;
  std::vector<double> n_F, n_R;
  std::vector<double> log_wF_agg, log_wR_agg;
  double log_nu_minus1 = 0.0;  // shock behind the period-0 education choice

  int periods() const { return static_cast<int>(log_nu.size()); }
};

struct CrossSectionWave {
  std::vector<std::uint8_t> F;  // education dummy
  std::vector<double> log_wage;
  std::vector<double> consumption;
  std::vector<double> leisure;
  std::vector<double> eps;  // sector-specific productivity draw

  int size() const { return static_cast<int>(F.size()); }
};

struct Economy {
  AggregatePath agg;
  CrossSectionWave wave1, wave2;  // working-age cross-sections at t = 1, 2
};

namespace ge_detail {
inline CrossSectionWave draw_wave(const GEParams& p, int n, double theta_prev,
                                  double log_w_F, double log_w_R, RngStream& rng) {
  CrossSectionWave w;
  w.F.resize(n);
  w.log_wage.resize(n);
  w.consumption.resize(n);
  w.leisure.resize(n);
  w.eps.resize(n);
  const double sd_F = std::sqrt(p.sigma_F_sq);
  const double sd_R = std::sqrt(p.sigma_R_sq);
  const double leis = (1.0 - p.sigma) * p.time_endowment;
  for (int i = 0; i < n; ++i) {
    const double log_gamma = p.mu + rng.normal();
    const double z = rng.normal();  // one productivity draw per individual
    const bool f = chooses_F(std::exp(log_gamma), theta_prev);
    const double eps =
        f ? (-0.5 * p.sigma_F_sq + sd_F * z) : (-0.5 * p.sigma_R_sq + sd_R * z);
    const double lw = (f ? log_w_F : log_w_R) + eps;
    w.F[i] = f ? 1 : 0;
    w.eps[i] = eps;
    w.log_wage[i] = lw;
    w.consumption[i] = p.sigma * std::exp(lw) * p.time_endowment;
    w.leisure[i] = leis;
  }
  return w;
}
}  // namespace ge_detail

inline Economy simulate_economy(const GEParams& p, int tau, int n, RngStream& rng) {
  if (tau < 3) throw DomainError("simulate_economy: tau must be >= 3");
  if (n < 100) throw DomainError("simulate_economy: n must be >= 100");
  Economy e;
  AggregatePath& a = e.agg;
  const int periods = tau + 1;  // t = 0..tau
  a.log_nu.resize(periods);
  a.n_F.resize(periods);
  a.n_R.resize(periods);
  a.log_wF_agg.resize(periods);
  a.log_wR_agg.resize(periods);

  const double sd_eta = std::sqrt(p.omega_sq);
  const double sd_stat = std::sqrt(p.omega_sq / (1.0 - p.varrho * p.varrho));
  a.log_nu_minus1 = sd_stat * rng.normal();
  double prev = a.log_nu_minus1;
  for (int t = 0; t < periods; ++t) {
    a.log_nu[t] = p.varrho * prev + sd_eta * rng.normal();
    prev = a.log_nu[t];
  }
  for (int t = 0; t < periods; ++t) {
    const double shock_at_choice = (t == 0) ? a.log_nu_minus1 : a.log_nu[t - 1];
    const double pf = fraction_choosing_F(p, shock_at_choice);
    a.n_F[t] = pf;
    a.n_R[t] = 1.0 - pf;
    const auto [zf, zr] = equilibrium_log_wages(p, a.n_F[t], a.n_R[t], a.log_nu[t]);
    a.log_wF_agg[t] = zf;
    a.log_wR_agg[t] = zr;
  }

  const double theta0 =
      ge_theta(p, std::log(a.n_F[1] / a.n_R[1]), a.log_nu[0]);
  e.wave1 = ge_detail::draw_wave(p, n, theta0, a.log_wF_agg[1], a.log_wR_agg[1], rng);
  const double theta1 =
      ge_theta(p, std::log(a.n_F[2] / a.n_R[2]), a.log_nu[1]);
  e.wave2 = ge_detail::draw_wave(p, n, theta1, a.log_wF_agg[2], a.log_wR_agg[2], rng);
  return e;
}

}  // namespace aggshock
