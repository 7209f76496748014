#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/ge_model.hpp"
#include "aggshock/normal.hpp"
#include "aggshock/rng.hpp"

namespace aggshock {

enum class ThetaPolicy { truncated, censored };

inline ThetaPolicy theta_policy_from_string(const std::string& s) {
  if (s == "truncated") return ThetaPolicy::truncated;
  if (s == "censored") return ThetaPolicy::censored;
  throw DomainError("unknown theta policy: " + s);
}

inline const char* to_string(ThetaPolicy p) {
  return p == ThetaPolicy::truncated ? "truncated" : "censored";
}

constexpr double kThetaCensorValue = 0.99;

namespace ge_detail {

struct SectorLogStats {
  double mean = 0, mean_sq = 0;
  long count = 0;
};

inline SectorLogStats sector_log_stats(const CrossSectionWave& w, bool pick_F) {
  SectorLogStats s;
  const int n = w.size();
  for (int i = 0; i < n; ++i) {
    if ((w.F[i] != 0) != pick_F) continue;
    ++s.count;
    s.mean += w.log_wage[i];
    s.mean_sq += w.log_wage[i] * w.log_wage[i];
  }
  if (s.count == 0) throw DegenerateSample("empty sector cell in wave data");
  s.mean /= s.count;
  s.mean_sq /= s.count;
  return s;
}

}  // namespace ge_detail

// Labor-demand slope from the wage equations: the observed employment gap
// between the waves over the gap in F-sector mean log wages.
inline double estimate_alpha1(const CrossSectionWave& wave1,
                              const CrossSectionWave& wave2, double n1_F,
                              double n2_F) {
  const double d1 = ge_detail::sector_log_stats(wave1, true).mean;
  const double d2 = ge_detail::sector_log_stats(wave2, true).mean;
  if (d1 == d2)
    throw DegenerateSample("wave wage means coincide, labor-demand slope undefined");
  return (std::log(n1_F) - std::log(n2_F)) / (d1 - d2);
}

// Consumption share from the mean consumption/leisure ratio of wave-1 F
// workers against the aggregate F wage.
inline double estimate_sigma(const CrossSectionWave& wave1, double wF_agg_1) {
  double m = 0;
  long cnt = 0;
  const int n = wave1.size();
  for (int i = 0; i < n; ++i) {
    if (!wave1.F[i]) continue;
    m += wave1.consumption[i] / wave1.leisure[i];
    ++cnt;
  }
  if (cnt == 0) throw DegenerateSample("no F-sector workers in wave 1");
  m /= cnt;
  if (m <= 0) throw DegenerateSample("nonpositive consumption/leisure ratio");
  return m / (wF_agg_1 + m);
}

// Per-sector variances of log wages, divisor n_sector (uncentered-moment
// convention of the estimating equations).
inline std::pair<double, double> estimate_shock_variances(const CrossSectionWave& wave1) {
  const auto f = ge_detail::sector_log_stats(wave1, true);
  const auto r = ge_detail::sector_log_stats(wave1, false);
  if (f.count < 2 || r.count < 2)
    throw DegenerateSample("sector cell too small for a variance");
  return {f.mean_sq - f.mean * f.mean, r.mean_sq - r.mean * r.mean};
}

// log nu_t from the wage and employment gaps; exact at the true slope.
inline std::vector<double> recover_log_nu(const AggregatePath& path,
                                          double alpha1_hat) {
  const int periods = path.periods();
  std::vector<double> nu(periods);
  for (int t = 0; t < periods; ++t)
    nu[t] = alpha1_hat * (path.log_wF_agg[t] - path.log_wR_agg[t]) -
            (std::log(path.n_F[t]) - std::log(path.n_R[t]));
  return nu;
}

struct Ar1Fit {
  double varrho_hat = 0, omega_sq_hat = 0;
};

// No-intercept AR(1): slope by OLS through the origin, innovation variance as
// the mean squared residual over the adjacent pairs.
inline Ar1Fit estimate_ar1(const std::vector<double>& log_nu_hat) {
  const int pairs = static_cast<int>(log_nu_hat.size()) - 1;
  if (pairs < 2) throw DegenerateSample("AR(1) fit needs at least two pairs");
  double sxx = 0, sxy = 0;
  for (int t = 0; t < pairs; ++t) {
    sxx += log_nu_hat[t] * log_nu_hat[t];
    sxy += log_nu_hat[t] * log_nu_hat[t + 1];
  }
  if (sxx == 0) throw DegenerateSample("AR(1) regressor is identically zero");
  Ar1Fit fit;
  fit.varrho_hat = sxy / sxx;
  double rss = 0;
  for (int t = 0; t < pairs; ++t) {
    const double r = log_nu_hat[t + 1] - fit.varrho_hat * log_nu_hat[t];
    rss += r * r;
  }
  fit.omega_sq_hat = rss / pairs;
  return fit;
}

struct MuEstimate {
  double mu_hat = 0;
  bool censor_flag = false;
};

// Closed form solving the Probit first-order condition exactly. Under the
// censored policy an index >= 1 is clamped to 0.99; under the truncated
// policy it is an error the caller turns into a dropped replication.
inline MuEstimate estimate_mu(const CrossSectionWave& wave2, double theta_hat,
                              ThetaPolicy policy) {
  long nF = 0;
  for (auto f : wave2.F) nF += f;
  const double p_F = static_cast<double>(nF) / wave2.size();
  if (p_F <= 0.0 || p_F >= 1.0)
    throw DegenerateSample("education share at 0 or 1, probit inversion undefined");
  MuEstimate out;
  double theta = theta_hat;
  if (theta >= 1.0) {
    if (policy == ThetaPolicy::truncated)
      throw ThetaOutOfRange("plug-in index reached 1, replication not usable");
    theta = kThetaCensorValue;
    out.censor_flag = true;
  }
  out.mu_hat = std::log(1.0 - theta) - std_normal_quantile(1.0 - p_F);
  return out;
}

// Point estimates feeding the plug-in index.
struct GEEstimate {
  // parameter order used throughout: mu, delta1, delta2, sigma, delta3,
  // sigma_F_sq, sigma_R_sq, varrho, omega_sq
  double mu = 0, delta1 = 0, delta2 = 0, sigma = 0, delta3 = 0;
  double sigma_F_sq = 0, sigma_R_sq = 0, varrho = 0, omega_sq = 0;
  double alpha1 = 0;
  double p2F = 0;
  std::vector<double> nu_hat;  // recovered shocks, t = 0..tau

  double theta_hat = 0;   // after any censoring
  double theta_star = 0;  // misspecified index, after any censoring
  bool censor_flag = false;            // feasible index was >= 1
  bool censor_flag_star = false;       // misspecified index was >= 1
  bool censor_flag_infeasible = false; // true index was >= 1

  // under the truncated policy a raised flag means the matching mu_* is NaN
  double mu_infeasible = 0;
  double mu_misspecified = 0;
  bool mu_valid = false, mu_infeasible_valid = false, mu_misspecified_valid = false;

  std::vector<double> as_phi() const {
    return {mu, delta1, delta2, sigma, delta3, sigma_F_sq, sigma_R_sq, varrho, omega_sq};
  }
};

inline const char* ge_param_name(int j) {
  static const char* names[] = {"mu",         "delta1", "delta2",
                                "sigma",      "delta3", "sigma_F_sq",
                                "sigma_R_sq", "varrho", "omega_sq"};
  return names[j];
}

// Plug-in choice index for the wave-2 education decision (made at t = 1).
inline double theta_plug_in(const GEEstimate& est, const AggregatePath& path) {
  const double dvar = est.sigma_R_sq - est.sigma_F_sq;
  const double den = est.sigma * (dvar + est.omega_sq) / (2.0 * est.alpha1);
  if (den == 0.0) throw DomainError("theta_plug_in: zero denominator");
  const double log_ratio2 = std::log(path.n_F[2]) - std::log(path.n_R[2]);
  return (log_ratio2 + 0.5 * dvar + est.varrho * est.nu_hat[1]) / den;
}

// Misspecified index: the realized next-period shock replaces the conditional
// mean in the numerator and the innovation variance drops out of the
// denominator — a static econometrician reading a dynamic economy.
inline double theta_star_plug_in(const GEEstimate& est, const AggregatePath& path) {
  const double dvar = est.sigma_R_sq - est.sigma_F_sq;
  const double den = est.sigma * dvar / (2.0 * est.alpha1);
  if (den == 0.0) throw DomainError("theta_star_plug_in: zero denominator");
  const double log_ratio2 = std::log(path.n_F[2]) - std::log(path.n_R[2]);
  return (log_ratio2 + 0.5 * dvar + est.nu_hat[2]) / den;
}

inline MuEstimate estimate_mu_misspecified(const CrossSectionWave& wave2,
                                           const AggregatePath& path,
                                           const GEEstimate& est,
                                           ThetaPolicy policy) {
  return estimate_mu(wave2, theta_star_plug_in(est, path), policy);
}

// Full chain on one simulated economy. Never throws on index incidents:
// validity flags say which mu variants exist under the truncated policy, so
// the Monte Carlo layer can drop exactly what the policy prescribes.
inline GEEstimate estimate_ge(const Economy& e, const GEParams& truth,
                              ThetaPolicy policy) {
  GEEstimate est;
  const auto f1 = ge_detail::sector_log_stats(e.wave1, true);
  const auto f2 = ge_detail::sector_log_stats(e.wave2, true);
  const auto r1 = ge_detail::sector_log_stats(e.wave1, false);
  est.delta1 = f1.mean;
  est.delta2 = f2.mean;
  est.delta3 = r1.mean;
  auto [sF2, sR2] = estimate_shock_variances(e.wave1);
  est.sigma_F_sq = sF2;
  est.sigma_R_sq = sR2;
  est.sigma = estimate_sigma(e.wave1, std::exp(e.agg.log_wF_agg[1]));
  if (est.delta1 == est.delta2)
    throw DegenerateSample("wave wage means coincide, labor-demand slope undefined");
  est.alpha1 =
      (std::log(e.agg.n_F[1]) - std::log(e.agg.n_F[2])) / (est.delta1 - est.delta2);
  est.nu_hat = recover_log_nu(e.agg, est.alpha1);
  const auto ar = estimate_ar1(est.nu_hat);
  est.varrho = ar.varrho_hat;
  est.omega_sq = ar.omega_sq_hat;

  long nF2 = 0;
  for (auto f : e.wave2.F) nF2 += f;
  est.p2F = static_cast<double>(nF2) / e.wave2.size();

  const double theta_raw = theta_plug_in(est, e.agg);
  const double theta_star_raw = theta_star_plug_in(est, e.agg);
  const double theta_true =
      ge_theta(truth, std::log(e.agg.n_F[2]) - std::log(e.agg.n_R[2]), e.agg.log_nu[1]);

  const bool censor = policy == ThetaPolicy::censored;
  est.censor_flag = theta_raw >= 1.0;
  est.censor_flag_star = theta_star_raw >= 1.0;
  est.censor_flag_infeasible = theta_true >= 1.0;
  est.theta_hat = (est.censor_flag && censor) ? kThetaCensorValue : theta_raw;
  est.theta_star =
      (est.censor_flag_star && censor) ? kThetaCensorValue : theta_star_raw;
  const double theta_true_used =
      (est.censor_flag_infeasible && censor) ? kThetaCensorValue : theta_true;

  est.mu_valid = censor || !est.censor_flag;
  est.mu_misspecified_valid = censor || !est.censor_flag_star;
  est.mu_infeasible_valid = censor || !est.censor_flag_infeasible;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto mu_at = [&](double theta) {
    return estimate_mu(e.wave2, theta, ThetaPolicy::censored).mu_hat;
  };
  est.mu = est.mu_valid ? mu_at(est.theta_hat) : nan;
  est.mu_misspecified = est.mu_misspecified_valid ? mu_at(est.theta_star) : nan;
  est.mu_infeasible = est.mu_infeasible_valid ? mu_at(theta_true_used) : nan;
  return est;
}

// ---------------------------------------------------------------------------
// Long-panel toy model: q_{i,t} = x_{i,t}(gamma/omega) + nu_t + eps_{i,t}.
// Step 1 is OLS of q on x plus a full set of period dummies, computed through
// the algebraically identical partitioned form (within-period demeaning).

struct LongPanelEstimate {
  double gamma_hat = 0, delta_hat = 0, omega_hat = 0;
  std::vector<double> nu_hat;  // period-dummy coefficients
};

inline LongPanelEstimate long_panel_estimate(const std::vector<double>& q,
                                             const std::vector<double>& x, int n,
                                             int T) {
  double sxx = 0, sxy = 0;
  std::vector<double> xbar(T, 0.0), qbar(T, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      xbar[t] += x[t * n + i];
      qbar[t] += q[t * n + i];
    }
    xbar[t] /= n;
    qbar[t] /= n;
  }
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      const double xd = x[t * n + i] - xbar[t];
      sxx += xd * xd;
      sxy += xd * (q[t * n + i] - qbar[t]);
    }
  if (sxx == 0) throw SingularDesign("regressor has no within-period variation");
  LongPanelEstimate out;
  out.delta_hat = sxy / sxx;
  out.nu_hat.resize(T);
  for (int t = 0; t < T; ++t) out.nu_hat[t] = qbar[t] - out.delta_hat * xbar[t];
  const auto ar = estimate_ar1(out.nu_hat);
  out.omega_hat = ar.varrho_hat;
  out.gamma_hat = out.delta_hat * out.omega_hat;
  return out;
}

// Simulate-and-estimate wrapper; innovation and noise variances are 1, the
// aggregate state starts from its stationary law.
inline LongPanelEstimate long_panel_two_step(double gamma, double omega_panel,
                                             int n, int T, RngStream& rng) {
  if (omega_panel <= -1.0 || omega_panel >= 1.0)
    throw DomainError("long panel requires |omega| < 1 for a stationary start");
  std::vector<double> x(static_cast<size_t>(n) * T), q(static_cast<size_t>(n) * T);
  for (auto& v : x) v = rng.normal();
  std::vector<double> nu(T);
  double prev = rng.normal() / std::sqrt(1.0 - omega_panel * omega_panel);
  for (int t = 0; t < T; ++t) {
    nu[t] = omega_panel * prev + rng.normal();
    prev = nu[t];
  }
  const double delta = gamma / omega_panel;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      q[t * n + i] = x[t * n + i] * delta + nu[t] + rng.normal();
  return long_panel_estimate(q, x, n, T);
}

// ---------------------------------------------------------------------------
// Estimating-equation system for inference. Observed aggregates enter as
// data; the wage used in the consumption-share row is the aggregate F wage.

// Per-individual micro moment (7-vector) at an arbitrary parameter point.
// Order: mu, delta1, delta2, sigma, delta3, sigma_F_sq, sigma_R_sq, varrho,
// omega_sq. prob_F is the model choice probability implied by phi.
struct GEMomentContext {
  double w1F_agg = 0;   // level aggregate wage behind wave 1's F sector
  double prob_F = 0;    // 1 - Phi(log(1 - Theta(phi)) - mu)
};

inline void cross_moment(const std::vector<double>& phi, const Economy& e,
                         const GEMomentContext& ctx, int i, double* f) {
  const double delta1 = phi[1], delta2 = phi[2], sigma = phi[3], delta3 = phi[4],
               sF2 = phi[5], sR2 = phi[6];
  const bool F1 = e.wave1.F[i] != 0;
  const bool F2 = e.wave2.F[i] != 0;
  const double lw1 = e.wave1.log_wage[i];
  const double lw2 = e.wave2.log_wage[i];
  const double col = e.wave1.consumption[i] / e.wave1.leisure[i];
  f[0] = F1 ? lw1 - delta1 : 0.0;
  f[1] = F1 ? col - ctx.w1F_agg * sigma / (1.0 - sigma) : 0.0;
  f[2] = F1 ? lw1 * lw1 - (sF2 + delta1 * delta1) : 0.0;
  f[3] = !F1 ? lw1 - delta3 : 0.0;
  f[4] = !F1 ? lw1 * lw1 - (sR2 + delta3 * delta3) : 0.0;
  f[5] = F2 ? lw2 - delta2 : 0.0;
  f[6] = (F2 ? 1.0 : 0.0) - ctx.prob_F;
}

inline void time_moment(const std::vector<double>& phi, double nu_t,
                        double nu_next, double* g) {
  const double resid = nu_next - phi[7] * nu_t;
  g[0] = nu_t * resid;
  g[1] = resid * resid - phi[8];
}

// Theta implied by a parameter point, holding the observed aggregates fixed.
inline double ge_theta_at_phi(const std::vector<double>& phi, const Economy& e,
                              const std::vector<double>& nu_at_phi) {
  const double delta1 = phi[1], delta2 = phi[2], sigma = phi[3], sF2 = phi[5],
               sR2 = phi[6], varrho = phi[7], omega_sq = phi[8];
  if (delta1 == delta2) throw EvaluationError("moment evaluation hit delta1 == delta2");
  const double alpha1 =
      (std::log(e.agg.n_F[1]) - std::log(e.agg.n_F[2])) / (delta1 - delta2);
  const double dvar = sR2 - sF2;
  const double den = sigma * (dvar + omega_sq) / (2.0 * alpha1);
  if (den == 0.0) throw EvaluationError("moment evaluation hit a zero denominator");
  const double log_ratio2 = std::log(e.agg.n_F[2]) - std::log(e.agg.n_R[2]);
  return (log_ratio2 + 0.5 * dvar + varrho * nu_at_phi[1]) / den;
}

// Averaged stacked moments (7 micro rows over n, 2 time rows over tau pairs).
// The closed-form estimators are their exact root. Under the censored policy
// the index is clamped exactly as in estimation so the system stays coherent
// at the reported estimate; a guard keeps the log defined during numerical
// differentiation near the boundary.
inline std::vector<double> ge_stacked_moments(const std::vector<double>& phi,
                                              const Economy& e,
                                              ThetaPolicy policy) {
  const double delta1 = phi[1], delta2 = phi[2];
  if (delta1 == delta2) throw EvaluationError("moment evaluation hit delta1 == delta2");
  const double alpha1 =
      (std::log(e.agg.n_F[1]) - std::log(e.agg.n_F[2])) / (delta1 - delta2);
  const std::vector<double> nu = recover_log_nu(e.agg, alpha1);
  double theta = ge_theta_at_phi(phi, e, nu);
  if (policy == ThetaPolicy::censored && theta >= 1.0) theta = kThetaCensorValue;
  if (theta >= 1.0) theta = 1.0 - 1e-12;
  GEMomentContext ctx;
  ctx.w1F_agg = std::exp(e.agg.log_wF_agg[1]);
  ctx.prob_F = 1.0 - std_normal_cdf(std::log(1.0 - theta) - phi[0]);

  const int n = e.wave1.size();
  std::vector<double> m(9, 0.0);
  double f[7];
  for (int i = 0; i < n; ++i) {
    cross_moment(phi, e, ctx, i, f);
    for (int j = 0; j < 7; ++j) m[j] += f[j];
  }
  for (int j = 0; j < 7; ++j) m[j] /= n;

  const int pairs = static_cast<int>(nu.size()) - 1;
  double g[2];
  for (int t = 0; t < pairs; ++t) {
    time_moment(phi, nu[t], nu[t + 1], g);
    m[7] += g[0];
    m[8] += g[1];
  }
  m[7] /= pairs;
  m[8] /= pairs;
  return m;
}

}  // namespace aggshock
