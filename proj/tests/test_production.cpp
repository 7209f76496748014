#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/production.hpp"
#include "aggshock/rng.hpp"

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Panel whose phi_t is exactly a degree-2 polynomial in (i,k), eta = 0.
aggshock::FirmPanel exact_poly_panel(double beta_l, aggshock::RngStream& rng) {
  aggshock::FirmPanel panel;
  panel.J = 400;
  panel.T = 4;
  const int cells = panel.J * panel.T;
  panel.y.resize(cells);
  panel.l.resize(cells);
  panel.k.resize(cells);
  panel.i.resize(cells);
  panel.eps.assign(cells, 0.0);
  panel.nu.assign(panel.T, 0.0);
  const double c0[] = {0.1, -0.2, 0.3, 0.05};
  const double c1[] = {0.4, 0.5, 0.35, 0.45};
  const double c2[] = {0.2, 0.15, 0.25, 0.1};
  const double c3[] = {0.1, -0.05, 0.08, 0.12};
  const double c4[] = {-0.03, 0.06, 0.02, -0.04};
  const double c5[] = {0.05, 0.02, -0.06, 0.03};
  for (int t = 0; t < panel.T; ++t)
    for (int j = 0; j < panel.J; ++j) {
      const int idx = panel.idx(j, t);
      const double iv = 0.5 + 1.5 * rng.uniform();
      const double kv = 1.0 + 2.0 * rng.uniform();
      const double phi = c0[t] + c1[t] * iv + c2[t] * kv + c3[t] * iv * kv +
                         c4[t] * iv * iv + c5[t] * kv * kv;
      panel.i[idx] = iv;
      panel.k[idx] = kv;
      panel.l[idx] = 0.3 + 0.5 * iv - 0.2 * kv + 0.1 * rng.normal();
      panel.y[idx] = beta_l * panel.l[idx] + phi;
      panel.eps[idx] = phi;  // stash the true phi for comparison
    }
  return panel;
}

}  // namespace

TEST_CASE("bivariate powers enumerate the full polynomial basis") {
  const auto p2 = aggshock::bivariate_powers(2);
  REQUIRE(p2.size() == 6);
  REQUIRE(p2[0] == std::pair<int, int>{0, 0});
  const auto p3 = aggshock::bivariate_powers(3);
  REQUIRE(p3.size() == 10);
  for (const auto& [a, b] : p3) REQUIRE(a + b <= 3);
}

TEST_CASE("simulated panel obeys the capital law of motion exactly") {
  aggshock::ProductionParams p;
  aggshock::RngStream rng(11, 0);
  const auto panel = aggshock::simulate_firm_panel(p, 100, 5, rng);
  for (int j = 0; j < panel.J; ++j)
    for (int t = 0; t + 1 < panel.T; ++t) {
      const double next = (1.0 - p.dep) * panel.k[panel.idx(j, t)] + panel.i[panel.idx(j, t)];
      REQUIRE(panel.k[panel.idx(j, t + 1)] == Catch::Approx(next).margin(1e-12));
    }
}

TEST_CASE("no shocks make output an exact affine function of labor and capital") {
  aggshock::ProductionParams p;
  p.sigma_zeta_sq = 0.0;
  p.omega_nu_sq = 0.0;
  p.sigma_eta_sq = 0.0;
  aggshock::RngStream rng(12, 0);
  const auto panel = aggshock::simulate_firm_panel(p, 60, 4, rng);
  for (int j = 0; j < panel.J; ++j)
    for (int t = 0; t < panel.T; ++t) {
      const int idx = panel.idx(j, t);
      const double pred = p.beta0 + p.beta_l * panel.l[idx] + p.beta_k * panel.k[idx];
      REQUIRE(panel.y[idx] == Catch::Approx(pred).margin(1e-12));
    }
}

TEST_CASE("labor is endogenous: corr(l, omega) exceeds 0.3") {
  aggshock::ProductionParams p;
  aggshock::RngStream rng(13, 0);
  const auto panel = aggshock::simulate_firm_panel(p, 1000, 5, rng);
  std::vector<double> lv, ov;
  for (int t = 0; t < panel.T; ++t)
    for (int j = 0; j < panel.J; ++j) {
      lv.push_back(panel.l[panel.idx(j, t)]);
      ov.push_back(panel.nu[t] + panel.eps[panel.idx(j, t)]);
    }
  REQUIRE(correlation(lv, ov) > 0.3);
}

TEST_CASE("first stage is exact when phi_t is polynomial of the fitted degree") {
  aggshock::RngStream rng(14, 0);
  const double beta_l = 0.6;
  const auto panel = exact_poly_panel(beta_l, rng);
  const auto fs = aggshock::first_stage(panel, 2);
  REQUIRE(fs.beta_l_hat == Catch::Approx(beta_l).margin(1e-6));
  for (int t = 0; t < panel.T; ++t)
    for (int j = 0; j < panel.J; j += 37) {
      const int idx = panel.idx(j, t);
      REQUIRE(fs.phi_hat[idx] == Catch::Approx(panel.eps[idx]).margin(1e-7));
    }
}

TEST_CASE("first stage recovers beta_l at the default calibration") {
  aggshock::ProductionParams p;
  double mean_bl = 0.0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    aggshock::RngStream rng(15, static_cast<std::uint64_t>(r));
    const auto panel = aggshock::simulate_firm_panel(p, 2000, 5, rng);
    mean_bl += aggshock::first_stage(panel, 3).beta_l_hat;
  }
  mean_bl /= reps;
  REQUIRE(mean_bl == Catch::Approx(p.beta_l).epsilon(0.03));
}

TEST_CASE("additive time dummies leave at least 3x the first-stage bias") {
  aggshock::ProductionParams p;
  const int reps = 100;
  double bias_pp = 0.0, bias_dum = 0.0;
  for (int r = 0; r < reps; ++r) {
    aggshock::RngStream rng(16, static_cast<std::uint64_t>(r));
    const auto panel = aggshock::simulate_firm_panel(p, 1000, 5, rng);
    bias_pp += aggshock::first_stage(panel, 3).beta_l_hat - p.beta_l;
    bias_dum += aggshock::first_stage_additive_dummies(panel, 3) - p.beta_l;
  }
  bias_pp /= reps;
  bias_dum /= reps;
  REQUIRE(std::fabs(bias_dum) >= 3.0 * std::fabs(bias_pp));
}

TEST_CASE("first-stage residuals are orthogonal to the period design") {
  aggshock::ProductionParams p;
  aggshock::RngStream rng(17, 0);
  const auto panel = aggshock::simulate_firm_panel(p, 500, 4, rng);
  const auto powers = aggshock::bivariate_powers(3);
  for (int t = 0; t < panel.T; ++t) {
    const int kcols = 1 + static_cast<int>(powers.size());
    aggshock::Matrix x(panel.J, kcols);
    std::vector<double> y(panel.J);
    for (int j = 0; j < panel.J; ++j) {
      const int idx = panel.idx(j, t);
      x(j, 0) = panel.l[idx];
      for (size_t c = 0; c < powers.size(); ++c)
        x(j, 1 + static_cast<int>(c)) =
            std::pow(panel.i[idx], powers[c].first) * std::pow(panel.k[idx], powers[c].second);
      y[j] = panel.y[idx];
    }
    const auto fit = aggshock::ols(x, y);
    for (int c = 0; c < kcols; ++c) {
      double dot = 0.0, nx = 0.0, nr = 0.0;
      for (int j = 0; j < panel.J; ++j) {
        dot += x(j, c) * fit.resid[j];
        nx += x(j, c) * x(j, c);
        nr += fit.resid[j] * fit.resid[j];
      }
      REQUIRE(std::fabs(dot) <= 1e-8 * std::sqrt(nx * nr));
    }
  }
}

TEST_CASE("phi_hat approximation error decreases with the polynomial degree") {
  aggshock::ProductionParams p;
  p.sigma_eta_sq = 0.0;
  aggshock::RngStream rng(18, 0);
  const auto panel = aggshock::simulate_firm_panel(p, 2000, 4, rng);
  std::vector<double> mse(3, 0.0);
  const int degrees[] = {2, 3, 4};
  for (int d = 0; d < 3; ++d) {
    const auto fs = aggshock::first_stage(panel, degrees[d]);
    double acc = 0.0;
    for (int t = 0; t < panel.T; ++t)
      for (int j = 0; j < panel.J; ++j) {
        const int idx = panel.idx(j, t);
        const double truth =
            p.beta0 + p.beta_k * panel.k[idx] + panel.nu[t] + panel.eps[idx];
        acc += (fs.phi_hat[idx] - truth) * (fs.phi_hat[idx] - truth);
      }
    mse[d] = acc / (panel.J * panel.T);
  }
  REQUIRE(mse[1] < mse[0]);
  REQUIRE(mse[2] < mse[1]);
}

TEST_CASE("second stage recovers beta_k and is locally convex") {
  aggshock::ProductionParams p;
  const int reps = 20;
  double mean_tv = 0.0;
  for (int r = 0; r < reps; ++r) {
    aggshock::RngStream rng(19, static_cast<std::uint64_t>(r));
    const auto panel = aggshock::simulate_firm_panel(p, 2000, 5, rng);
    const auto fs = aggshock::first_stage(panel, 3);
    const double bk = aggshock::second_stage(panel, fs.beta_l_hat, fs.phi_hat, 2, true);
    mean_tv += bk;
    if (r == 0) {
      const auto ssr_at = [&](double b) {
        return aggshock::prod_detail::second_stage_ssr(panel, fs.beta_l_hat, fs.phi_hat,
                                                       2, true, b);
      };
      REQUIRE(ssr_at(bk) <= ssr_at(bk - 0.05));
      REQUIRE(ssr_at(bk) <= ssr_at(bk + 0.05));
    }
  }
  mean_tv /= reps;
  REQUIRE(mean_tv == Catch::Approx(p.beta_k).epsilon(0.05));
}

TEST_CASE("without aggregate shocks both second-stage variants agree") {
  aggshock::ProductionParams p;
  p.omega_nu_sq = 0.0;
  const int reps = 20;
  double mean_tv = 0.0, mean_ti = 0.0;
  for (int r = 0; r < reps; ++r) {
    aggshock::RngStream rng(20, static_cast<std::uint64_t>(r));
    const auto panel = aggshock::simulate_firm_panel(p, 1500, 5, rng);
    const auto fs = aggshock::first_stage(panel, 3);
    mean_tv += aggshock::second_stage(panel, fs.beta_l_hat, fs.phi_hat, 2, true);
    mean_ti += aggshock::second_stage(panel, fs.beta_l_hat, fs.phi_hat, 2, false);
  }
  mean_tv /= reps;
  mean_ti /= reps;
  REQUIRE(mean_tv == Catch::Approx(p.beta_k).epsilon(0.03));
  REQUIRE(mean_ti == Catch::Approx(p.beta_k).epsilon(0.03));
  REQUIRE(std::fabs(mean_tv - mean_ti) / p.beta_k < 0.01);
}

TEST_CASE("simulation preconditions are enforced") {
  aggshock::ProductionParams p;
  aggshock::RngStream rng(21, 0);
  REQUIRE_THROWS_AS(aggshock::simulate_firm_panel(p, 10, 5, rng), aggshock::DomainError);
  REQUIRE_THROWS_AS(aggshock::simulate_firm_panel(p, 100, 2, rng), aggshock::DomainError);
  p.a1 = 0.0;
  REQUIRE_THROWS_AS(aggshock::simulate_firm_panel(p, 100, 5, rng), aggshock::DomainError);
}
