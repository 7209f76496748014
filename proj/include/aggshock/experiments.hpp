#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "aggshock/config.hpp"
#include "aggshock/errors.hpp"
#include "aggshock/ge_estimation.hpp"
#include "aggshock/ge_model.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/portfolio.hpp"
#include "aggshock/production.hpp"
#include "aggshock/rng.hpp"

namespace aggshock {

struct ParamSummary {
  std::string parameter;
  double true_value = 0;
  double mean_estimate = 0;
  double bias = 0;
  double coverage_90 = std::numeric_limits<double>::quiet_NaN();
  long theta_incidents = 0;
  long reps_used = 0;
  // dispersion diagnostics; not part of the serialized table schema
  double stddev = std::numeric_limits<double>::quiet_NaN();
  double mad = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

struct MonteCarloSummary {
  std::string spec_id, model, policy;
  long n = 0, tau = 0, reps = 0;
  std::uint64_t seed = 0;
  std::vector<ParamSummary> rows;
  long failures = 0;
  std::vector<std::string> failure_log;  // "rep <id>: <what>"
  long v_psd_violations = 0;             // sandwich V with a negative eigenvalue
};

namespace mc_detail {

// Replication r always runs on RngStream(seed, r); results land in slot r, so
// the merge order — and every output byte — is independent of scheduling.
template <class Result, class Body>
std::vector<Result> run_replications(long reps, int threads, const char* label,
                                     Body&& body) {
  std::vector<Result> slots(reps);
  int nt = threads > 0 ? threads
                       : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::max(1, std::min<int>(nt, static_cast<int>(reps)));
  std::atomic<long> next{0}, done{0};
  const long step = std::max(1L, reps / 20);
  auto work = [&]() {
    for (;;) {
      const long r = next.fetch_add(1);
      if (r >= reps) return;
      slots[r] = body(r);
      const long d = done.fetch_add(1) + 1;
      if (d % step == 0 || d == reps)
        std::fprintf(stderr, "\r%s: %ld/%ld", label, d, reps);
    }
  };
  if (nt == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::fprintf(stderr, "\n");
  return slots;
}

// Accumulates one summary row in replication order.
struct RowAccum {
  std::string parameter;
  double true_value = 0;
  double sum = 0;
  double sum_sq = 0;
  double sum_abs_err = 0;
  long used = 0;
  long incidents = 0;
  long covered = 0;
  long cover_n = 0;

  void add(double estimate) {
    sum += estimate;
    sum_sq += estimate * estimate;
    sum_abs_err += std::abs(estimate - true_value);
    ++used;
  }
  void add_coverage(bool hit) {
    covered += hit ? 1 : 0;
    ++cover_n;
  }
  ParamSummary finish() const {
    ParamSummary s;
    s.parameter = parameter;
    s.true_value = true_value;
    s.mean_estimate = used ? sum / used : std::numeric_limits<double>::quiet_NaN();
    s.bias = s.mean_estimate - true_value;
    if (cover_n) s.coverage_90 = static_cast<double>(covered) / cover_n;
    s.theta_incidents = incidents;
    s.reps_used = used;
    if (used) {
      s.mad = sum_abs_err / used;
      const double msq = sum_sq / used - s.mean_estimate * s.mean_estimate;
      s.rmse = std::sqrt(std::max(msq, 0.0) + s.bias * s.bias);
      if (used > 1)
        s.stddev = std::sqrt(std::max(msq, 0.0) * used / (used - 1));
    }
    return s;
  }
};

inline bool v_is_psd(const Matrix& v) {
  const auto eig = symmetric_eigenvalues(v);
  double trace = 0;
  for (int j = 0; j < v.rows; ++j) trace += v(j, j);
  double min_eig = eig.empty() ? 0.0 : eig.front();
  for (double e : eig) min_eig = std::min(min_eig, e);
  return min_eig >= -1e-10 * std::max(trace, 1.0);
}

}  // namespace mc_detail

inline std::string make_spec_id(const MCConfig& cfg) {
  std::string id = cfg.model + "_n" + std::to_string(cfg.n) + "_tau" +
                   std::to_string(cfg.tau);
  if (cfg.model == "ge") {
    const auto it = cfg.overrides.find("ge.varrho");
    if (it != cfg.overrides.end()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", it->second);
      id += std::string("_varrho") + buf;
    }
    id += "_" + cfg.theta_policy;
  }
  return id;
}

// ---------------------------------------------------------------------------
// GE Monte Carlo

namespace mc_detail {

struct GERep {
  bool failed = false;
  std::string error;
  GEEstimate est;
  bool inference_ok = false;
  double se[9] = {0};
  double alpha1_se_v = 0;
  bool v_psd = true;
};

}  // namespace mc_detail

inline MonteCarloSummary run_ge_mc(const MCConfig& cfg) {
  const GEParams P = ge_params_from(cfg);
  const ThetaPolicy policy = theta_policy_from_string(cfg.theta_policy);
  const bool truncated = policy == ThetaPolicy::truncated;
  MonteCarloSummary out;
  out.spec_id = make_spec_id(cfg);
  out.model = "ge";
  out.policy = cfg.theta_policy;
  out.n = cfg.n;
  out.tau = cfg.tau;
  out.reps = cfg.reps;
  out.seed = cfg.seed;

  auto slots = mc_detail::run_replications<mc_detail::GERep>(
      cfg.reps, cfg.threads, out.spec_id.c_str(), [&](long r) {
        mc_detail::GERep rep;
        try {
          RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
          const Economy econ = simulate_economy(
              P, static_cast<int>(cfg.tau), static_cast<int>(cfg.n), rng);
          rep.est = estimate_ge(econ, P, policy);
          if (cfg.with_inference && rep.est.mu_valid) {
            const SandwichResult sw = sandwich(econ, rep.est, policy);
            for (int j = 0; j < 9; ++j) rep.se[j] = sw.se[j];
            rep.alpha1_se_v = alpha1_se(rep.est, sw);
            rep.v_psd = mc_detail::v_is_psd(sw.V);
            rep.inference_ok = true;
          }
        } catch (const std::exception& ex) {
          rep.failed = true;
          rep.error = ex.what();
        }
        return rep;
      });

  using mc_detail::RowAccum;
  // index into phi for the sandwich se of each reported parameter
  struct Row {
    const char* name;
    double truth;
    int phi_index;  // -1: no direct se
  };
  const Row feasible_rows[] = {
      {"mu", P.mu, 0},           {"varrho", P.varrho, 7},
      {"omega_sq", P.omega_sq, 8}, {"sigma", P.sigma, 3},
      {"sigma_F_sq", P.sigma_F_sq, 5}, {"sigma_R_sq", P.sigma_R_sq, 6},
      {"alpha1", P.alpha1, -1}};
  std::vector<RowAccum> acc;
  for (const auto& row : feasible_rows) {
    RowAccum a;
    a.parameter = row.name;
    a.true_value = row.truth;
    acc.push_back(a);
  }
  RowAccum acc_inf, acc_mis;
  acc_inf.parameter = "mu_infeasible";
  acc_inf.true_value = P.mu;
  acc_mis.parameter = "mu_misspecified";
  acc_mis.true_value = P.mu;

  for (long r = 0; r < cfg.reps; ++r) {
    const auto& rep = slots[r];
    if (rep.failed) {
      ++out.failures;
      out.failure_log.push_back("rep " + std::to_string(r) + ": " + rep.error);
      continue;
    }
    const auto& e = rep.est;
    for (auto& a : acc) a.incidents += e.censor_flag ? 1 : 0;
    acc_inf.incidents += e.censor_flag_infeasible ? 1 : 0;
    acc_mis.incidents += e.censor_flag_star ? 1 : 0;
    if (!rep.v_psd) ++out.v_psd_violations;

    const bool keep_feasible = !truncated || !e.censor_flag;
    if (keep_feasible) {
      const std::vector<double> phi = e.as_phi();
      const double est_vals[] = {e.mu,        e.varrho,     e.omega_sq, e.sigma,
                                 e.sigma_F_sq, e.sigma_R_sq, e.alpha1};
      for (size_t j = 0; j < acc.size(); ++j) {
        acc[j].add(est_vals[j]);
        if (rep.inference_ok) {
          const double se = feasible_rows[j].phi_index >= 0
                                ? rep.se[feasible_rows[j].phi_index]
                                : rep.alpha1_se_v;
          const double half = kCritical90 * se;
          acc[j].add_coverage(std::abs(est_vals[j] - feasible_rows[j].truth) <=
                              half);
        }
      }
      if (e.mu_infeasible_valid) acc_inf.add(e.mu_infeasible);
    }
    if (e.mu_misspecified_valid) acc_mis.add(e.mu_misspecified);
  }
  for (const auto& a : acc) out.rows.push_back(a.finish());
  out.rows.push_back(acc_inf.finish());
  out.rows.push_back(acc_mis.finish());
  return out;
}

// ---------------------------------------------------------------------------
// Portfolio Monte Carlo

namespace mc_detail {

struct PortfolioRep {
  bool failed = false;
  std::string error;
  double naive = 0, euler = 0, two_step = 0;
  bool covered = false;
};

}  // namespace mc_detail

inline MonteCarloSummary run_portfolio_mc(const MCConfig& cfg) {
  const PortfolioParams P = portfolio_params_from(cfg);
  MonteCarloSummary out;
  out.spec_id = make_spec_id(cfg);
  out.model = "portfolio";
  out.policy = "-";
  out.n = cfg.n;
  out.tau = cfg.tau;
  out.reps = cfg.reps;
  out.seed = cfg.seed;

  const double kappa = static_cast<double>(cfg.n) / cfg.tau;
  const double avar = asymptotic_variance(P, kappa);
  const double se_two_step = std::sqrt(avar / cfg.n);

  auto slots = mc_detail::run_replications<mc_detail::PortfolioRep>(
      cfg.reps, cfg.threads, out.spec_id.c_str(), [&](long r) {
        mc_detail::PortfolioRep rep;
        try {
          RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
          const PortfolioCrossSection cs =
              simulate_cross_section(P, static_cast<int>(cfg.n), rng);
          const std::vector<double> nu =
              simulate_nu_series(P, static_cast<int>(cfg.tau), rng);
          rep.naive = naive_mm_estimate(cs, P.r);
          rep.euler = euler_foc_estimate(cs, P);
          const TwoStepEstimate ts = two_step_estimate(cs, nu, P.r);
          rep.two_step = ts.delta_hat;
          rep.covered = std::abs(ts.delta_hat - P.delta) <= kCritical90 * se_two_step;
        } catch (const std::exception& ex) {
          rep.failed = true;
          rep.error = ex.what();
        }
        return rep;
      });

  mc_detail::RowAccum a_naive, a_euler, a_two;
  a_naive.parameter = "delta_naive";
  a_euler.parameter = "delta_euler";
  a_two.parameter = "delta_two_step";
  a_naive.true_value = a_euler.true_value = a_two.true_value = P.delta;
  for (long r = 0; r < cfg.reps; ++r) {
    const auto& rep = slots[r];
    if (rep.failed) {
      ++out.failures;
      out.failure_log.push_back("rep " + std::to_string(r) + ": " + rep.error);
      continue;
    }
    a_naive.add(rep.naive);
    a_euler.add(rep.euler);
    a_two.add(rep.two_step);
    a_two.add_coverage(rep.covered);
  }
  out.rows = {a_naive.finish(), a_euler.finish(), a_two.finish()};
  return out;
}

// ---------------------------------------------------------------------------
// Production Monte Carlo (n maps to firms J, tau to periods T)

namespace mc_detail {

struct ProductionRep {
  bool failed = false;
  std::string error;
  double beta_l = 0, beta_l_dummies = 0, beta_k_varying = 0, beta_k_invariant = 0;
};

}  // namespace mc_detail

inline MonteCarloSummary run_production_mc(const MCConfig& cfg) {
  const ProductionRunParams R = production_params_from(cfg);
  MonteCarloSummary out;
  out.spec_id = make_spec_id(cfg);
  out.model = "production";
  out.policy = "-";
  out.n = cfg.n;
  out.tau = cfg.tau;
  out.reps = cfg.reps;
  out.seed = cfg.seed;

  auto slots = mc_detail::run_replications<mc_detail::ProductionRep>(
      cfg.reps, cfg.threads, out.spec_id.c_str(), [&](long r) {
        mc_detail::ProductionRep rep;
        try {
          RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
          const FirmPanel panel =
              simulate_firm_panel(R.params, static_cast<int>(cfg.n),
                                  static_cast<int>(cfg.tau), rng);
          const FirstStage fs = first_stage(panel, R.poly_degree);
          rep.beta_l = fs.beta_l_hat;
          rep.beta_l_dummies = first_stage_additive_dummies(panel, R.poly_degree);
          rep.beta_k_varying =
              second_stage(panel, fs.beta_l_hat, fs.phi_hat, R.g_degree, true);
          rep.beta_k_invariant =
              second_stage(panel, fs.beta_l_hat, fs.phi_hat, R.g_degree, false);
        } catch (const std::exception& ex) {
          rep.failed = true;
          rep.error = ex.what();
        }
        return rep;
      });

  mc_detail::RowAccum a_bl, a_bld, a_bkv, a_bki;
  a_bl.parameter = "beta_l";
  a_bld.parameter = "beta_l_pooled_dummies";
  a_bkv.parameter = "beta_k_time_varying";
  a_bki.parameter = "beta_k_time_invariant";
  a_bl.true_value = a_bld.true_value = R.params.beta_l;
  a_bkv.true_value = a_bki.true_value = R.params.beta_k;
  for (long r = 0; r < cfg.reps; ++r) {
    const auto& rep = slots[r];
    if (rep.failed) {
      ++out.failures;
      out.failure_log.push_back("rep " + std::to_string(r) + ": " + rep.error);
      continue;
    }
    a_bl.add(rep.beta_l);
    a_bld.add(rep.beta_l_dummies);
    a_bkv.add(rep.beta_k_varying);
    a_bki.add(rep.beta_k_invariant);
  }
  out.rows = {a_bl.finish(), a_bld.finish(), a_bkv.finish(), a_bki.finish()};
  return out;
}

// ---------------------------------------------------------------------------
// Long-panel Monte Carlo (n individuals, tau periods T)

namespace mc_detail {

struct PanelRep {
  bool failed = false;
  std::string error;
  double gamma = 0, delta = 0, omega = 0;
};

}  // namespace mc_detail

inline MonteCarloSummary run_long_panel_mc(const MCConfig& cfg) {
  const LongPanelParams P = long_panel_params_from(cfg);
  MonteCarloSummary out;
  out.spec_id = make_spec_id(cfg);
  out.model = "long_panel";
  out.policy = "-";
  out.n = cfg.n;
  out.tau = cfg.tau;
  out.reps = cfg.reps;
  out.seed = cfg.seed;

  auto slots = mc_detail::run_replications<mc_detail::PanelRep>(
      cfg.reps, cfg.threads, out.spec_id.c_str(), [&](long r) {
        mc_detail::PanelRep rep;
        try {
          RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
          const LongPanelEstimate e =
              long_panel_two_step(P.gamma, P.omega, static_cast<int>(cfg.n),
                                  static_cast<int>(cfg.tau), rng);
          rep.gamma = e.gamma_hat;
          rep.delta = e.delta_hat;
          rep.omega = e.omega_hat;
        } catch (const std::exception& ex) {
          rep.failed = true;
          rep.error = ex.what();
        }
        return rep;
      });

  mc_detail::RowAccum a_g, a_d, a_o;
  a_g.parameter = "gamma_hat";
  a_g.true_value = P.gamma;
  a_d.parameter = "delta_hat";
  a_d.true_value = P.gamma / P.omega;
  a_o.parameter = "omega_hat";
  a_o.true_value = P.omega;
  for (long r = 0; r < cfg.reps; ++r) {
    const auto& rep = slots[r];
    if (rep.failed) {
      ++out.failures;
      out.failure_log.push_back("rep " + std::to_string(r) + ": " + rep.error);
      continue;
    }
    a_g.add(rep.gamma);
    a_d.add(rep.delta);
    a_o.add(rep.omega);
  }
  out.rows = {a_g.finish(), a_d.finish(), a_o.finish()};
  return out;
}

// ---------------------------------------------------------------------------

inline MonteCarloSummary run_model_mc(const MCConfig& cfg) {
  if (cfg.model == "ge") return run_ge_mc(cfg);
  if (cfg.model == "portfolio") return run_portfolio_mc(cfg);
  if (cfg.model == "production") return run_production_mc(cfg);
  if (cfg.model == "long_panel") return run_long_panel_mc(cfg);
  throw DomainError("unknown model: " + cfg.model);
}

inline std::vector<MonteCarloSummary> run_robustness(
    const MCConfig& cfg, const std::vector<double>& varrho_grid) {
  if (varrho_grid.empty()) throw DomainError("robustness grid is empty");
  std::vector<MonteCarloSummary> out;
  for (const double v : varrho_grid) {
    MCConfig c = cfg;
    c.model = "ge";
    c.overrides["ge.varrho"] = v;
    out.push_back(run_ge_mc(c));
  }
  return out;
}

// A run with more than 1% hard failures cannot stand in for its spec.
inline void check_failure_budget(const MonteCarloSummary& s) {
  if (s.failures * 100 > s.reps) {
    std::string what = "spec " + s.spec_id + ": " + std::to_string(s.failures) +
                       " of " + std::to_string(s.reps) + " replications failed";
    if (!s.failure_log.empty()) what += " (first: " + s.failure_log.front() + ")";
    throw EvaluationError(what);
  }
}

}  // namespace aggshock
