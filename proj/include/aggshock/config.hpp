#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aggshock/errors.hpp"
#include "aggshock/ge_model.hpp"
#include "aggshock/portfolio.hpp"
#include "aggshock/production.hpp"

namespace aggshock {

constexpr const char* kArtifactVersion = "0.1.0";

struct LongPanelParams {
  double gamma = 0.5;
  double omega = 0.5;  // AR coefficient of the aggregate state
};

// One Monte Carlo run: model, scale, seed, policy, output, and dotted
// parameter overrides (e.g. "ge.mu"). Flags beat config-file values beat
// defaults; the merged result is echoed into every output's metadata.
struct MCConfig {
  std::string model = "ge";
  long reps = 500;
  long n = 10000;
  long tau = 100;
  std::uint64_t seed = 12345;
  std::string theta_policy = "truncated";
  std::string format = "csv";
  std::string out = "-";
  int threads = 0;  // 0 = hardware concurrency; never affects output bytes
  bool with_inference = true;
  std::map<std::string, double> overrides;
  std::vector<double> varrho_grid;
};

namespace config_detail {

inline const std::set<std::string>& known_override_keys() {
  static const std::set<std::string> keys = {
      "ge.mu", "ge.varrho", "ge.omega_sq", "ge.sigma", "ge.sigma_F_sq",
      "ge.sigma_R_sq", "ge.alpha0", "ge.alpha1", "ge.time_endowment",
      "portfolio.delta", "portfolio.r", "portfolio.mu", "portfolio.sigma_nu_sq",
      "portfolio.sigma_eps_sq", "portfolio.sigma_e_sq",
      "production.beta0", "production.beta_l", "production.beta_k",
      "production.dep", "production.rho_eps", "production.sigma_zeta_sq",
      "production.varrho_nu", "production.omega_nu_sq", "production.sigma_eta_sq",
      "production.a0", "production.a1", "production.a2", "production.b0",
      "production.b1", "production.b2", "production.labor_noise_sq",
      "production.poly_degree", "production.g_degree",
      "panel.gamma", "panel.omega"};
  return keys;
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config value for '" + key + "' is not a number: " + value);
  }
}

inline long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config value for '" + key + "' is not an integer: " + value);
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace config_detail

inline std::vector<double> parse_grid(const std::string& key, const std::string& value) {
  std::vector<double> grid;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = config_detail::trim(item);
    if (!item.empty()) grid.push_back(config_detail::parse_real(key, item));
  }
  if (grid.empty()) throw DomainError("empty grid for '" + key + "'");
  return grid;
}

// Apply one key=value pair; shared by the config-file reader and the CLI so
// both vocabularies stay identical.
inline void apply_config_kv(MCConfig& cfg, const std::string& key,
                            const std::string& value) {
  using namespace config_detail;
  if (key == "model") {
    if (value != "ge" && value != "portfolio" && value != "production" &&
        value != "long_panel")
      throw DomainError("unknown model: " + value);
    cfg.model = value;
  } else if (key == "reps") {
    cfg.reps = parse_int(key, value);
    if (cfg.reps < 1) throw DomainError("reps must be >= 1");
  } else if (key == "n") {
    cfg.n = parse_int(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_int(key, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "theta_policy") {
    if (value != "truncated" && value != "censored")
      throw DomainError("theta_policy must be 'truncated' or 'censored'");
    cfg.theta_policy = value;
  } else if (key == "format") {
    if (value != "csv" && value != "json" && value != "markdown")
      throw DomainError("format must be csv, json, or markdown");
    cfg.format = value;
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_int(key, value));
  } else if (key == "varrho_grid") {
    cfg.varrho_grid = parse_grid(key, value);
  } else if (known_override_keys().count(key)) {
    cfg.overrides[key] = parse_real(key, value);
  } else {
    throw DomainError("unknown config key: " + key);
  }
}

// Flat UTF-8 `key = value` file, '#' comments, blank lines ignored.
inline void load_config_file(MCConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError("config line " + std::to_string(lineno) +
                        " is not 'key = value': " + line);
    const std::string key = config_detail::trim(line.substr(0, eq));
    const std::string value = config_detail::trim(line.substr(eq + 1));
    apply_config_kv(cfg, key, value);
  }
}

namespace config_detail {
inline double pick(const MCConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.overrides.find(key);
  return it == cfg.overrides.end() ? fallback : it->second;
}
}  // namespace config_detail

inline GEParams ge_params_from(const MCConfig& cfg) {
  using config_detail::pick;
  GEParams base;
  GEParams p;
  p.mu = pick(cfg, "ge.mu", base.mu);
  p.varrho = pick(cfg, "ge.varrho", base.varrho);
  p.omega_sq = pick(cfg, "ge.omega_sq", base.omega_sq);
  p.sigma = pick(cfg, "ge.sigma", base.sigma);
  p.sigma_F_sq = pick(cfg, "ge.sigma_F_sq", base.sigma_F_sq);
  p.sigma_R_sq = pick(cfg, "ge.sigma_R_sq", base.sigma_R_sq);
  p.alpha0 = pick(cfg, "ge.alpha0", base.alpha0);
  p.alpha1 = pick(cfg, "ge.alpha1", base.alpha1);
  p.time_endowment = pick(cfg, "ge.time_endowment", base.time_endowment);
  if (p.alpha1 >= 0) throw DomainError("ge.alpha1 must be negative");
  if (p.sigma <= 0 || p.sigma >= 1) throw DomainError("ge.sigma must be in (0,1)");
  if (p.sigma_R_sq <= p.sigma_F_sq)
    throw DomainError("ge.sigma_R_sq must exceed ge.sigma_F_sq");
  if (p.omega_sq <= 0) throw DomainError("ge.omega_sq must be positive");
  return p;
}

inline PortfolioParams portfolio_params_from(const MCConfig& cfg) {
  using config_detail::pick;
  PortfolioParams base;
  PortfolioParams p;
  p.delta = pick(cfg, "portfolio.delta", base.delta);
  p.r = pick(cfg, "portfolio.r", base.r);
  p.mu = pick(cfg, "portfolio.mu", base.mu);
  p.sigma_nu_sq = pick(cfg, "portfolio.sigma_nu_sq", base.sigma_nu_sq);
  p.sigma_eps_sq = pick(cfg, "portfolio.sigma_eps_sq", base.sigma_eps_sq);
  p.sigma_e_sq = pick(cfg, "portfolio.sigma_e_sq", base.sigma_e_sq);
  return p;
}

struct ProductionRunParams {
  ProductionParams params;
  int poly_degree = 3;
  int g_degree = 2;
};

inline ProductionRunParams production_params_from(const MCConfig& cfg) {
  using config_detail::pick;
  ProductionParams base;
  ProductionRunParams run;
  ProductionParams& p = run.params;
  p.beta0 = pick(cfg, "production.beta0", base.beta0);
  p.beta_l = pick(cfg, "production.beta_l", base.beta_l);
  p.beta_k = pick(cfg, "production.beta_k", base.beta_k);
  p.dep = pick(cfg, "production.dep", base.dep);
  p.rho_eps = pick(cfg, "production.rho_eps", base.rho_eps);
  p.sigma_zeta_sq = pick(cfg, "production.sigma_zeta_sq", base.sigma_zeta_sq);
  p.varrho_nu = pick(cfg, "production.varrho_nu", base.varrho_nu);
  p.omega_nu_sq = pick(cfg, "production.omega_nu_sq", base.omega_nu_sq);
  p.sigma_eta_sq = pick(cfg, "production.sigma_eta_sq", base.sigma_eta_sq);
  p.a0 = pick(cfg, "production.a0", base.a0);
  p.a1 = pick(cfg, "production.a1", base.a1);
  p.a2 = pick(cfg, "production.a2", base.a2);
  p.b0 = pick(cfg, "production.b0", base.b0);
  p.b1 = pick(cfg, "production.b1", base.b1);
  p.b2 = pick(cfg, "production.b2", base.b2);
  p.labor_noise_sq = pick(cfg, "production.labor_noise_sq", base.labor_noise_sq);
  run.poly_degree = static_cast<int>(pick(cfg, "production.poly_degree", 3));
  run.g_degree = static_cast<int>(pick(cfg, "production.g_degree", 2));
  return run;
}

inline LongPanelParams long_panel_params_from(const MCConfig& cfg) {
  using config_detail::pick;
  LongPanelParams p;
  p.gamma = pick(cfg, "panel.gamma", p.gamma);
  p.omega = pick(cfg, "panel.omega", p.omega);
  if (p.omega <= -1 || p.omega >= 1 || p.omega == 0)
    throw DomainError("panel.omega must be in (-1,1) and nonzero");
  return p;
}

// Deterministic echo of the effective configuration for output metadata.
// Thread count and wall time are deliberately absent: outputs must be
// byte-identical across thread counts and machines.
inline std::vector<std::pair<std::string, std::string>> effective_config_lines(
    const MCConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("version", kArtifactVersion);
  kv.emplace_back("model", cfg.model);
  kv.emplace_back("reps", std::to_string(cfg.reps));
  kv.emplace_back("n", std::to_string(cfg.n));
  kv.emplace_back("tau", std::to_string(cfg.tau));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("theta_policy", cfg.theta_policy);
  kv.emplace_back("format", cfg.format);
  kv.emplace_back("out", cfg.out);
  if (!cfg.varrho_grid.empty()) {
    std::string grid;
    for (size_t i = 0; i < cfg.varrho_grid.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", cfg.varrho_grid[i]);
      if (i) grid += ",";
      grid += buf;
    }
    kv.emplace_back("varrho_grid", grid);
  }
  for (const auto& [k, v] : cfg.overrides) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv.emplace_back(k, buf);
  }
  return kv;
}

}  // namespace aggshock
