// Command-line front end: Monte Carlo batches per model, a robustness grid
// over the aggregate-shock persistence, and verbose single replications.

#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggshock/config.hpp"
#include "aggshock/errors.hpp"
#include "aggshock/experiments.hpp"
#include "aggshock/report.hpp"

namespace {

using aggshock::MCConfig;

// One --flag per config key so the CLI and config-file vocabularies coincide.
const std::vector<std::string>& scalar_keys() {
  static const std::vector<std::string> keys = {
      "reps", "n",   "tau",     "seed",       "theta_policy",
      "format", "out", "threads", "varrho_grid"};
  return keys;
}

struct FlagCapture {
  std::map<std::string, std::string> values;
  std::string config_path;
};

void register_config_flags(CLI::App* cmd, FlagCapture& cap, bool with_reps) {
  cmd->add_option("--config", cap.config_path, "flat key = value config file");
  for (const auto& key : scalar_keys()) {
    if (!with_reps && key == "reps") continue;
    cmd->add_option("--" + key, cap.values[key], "config key " + key);
  }
  for (const auto& key : aggshock::config_detail::known_override_keys())
    cmd->add_option("--" + key, cap.values[key], "parameter override " + key);
}

// Defaults, then config file, then flags.
void merge_into(MCConfig& cfg, const FlagCapture& cap, CLI::App* cmd) {
  if (!cap.config_path.empty()) aggshock::load_config_file(cfg, cap.config_path);
  for (const auto& [key, value] : cap.values) {
    if (cmd->count("--" + key) > 0) aggshock::apply_config_kv(cfg, key, value);
  }
}

int emit_and_write(const std::vector<aggshock::MonteCarloSummary>& summaries,
                   const MCConfig& cfg) {
  for (const auto& s : summaries) aggshock::check_failure_budget(s);
  const auto meta = aggshock::effective_config_lines(cfg);
  const std::string content = aggshock::emit_table(summaries, meta, cfg.format);
  aggshock::write_output(content, cfg.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and estimation for econometric models with aggregate shocks"};
  app.require_subcommand(1);

  auto* ge = app.add_subcommand("ge-mc", "Monte Carlo for the two-sector GE model");
  auto* pf = app.add_subcommand("portfolio", "Monte Carlo for the portfolio-choice model");
  auto* pr = app.add_subcommand("production", "Monte Carlo for the firm-panel production model");
  auto* pn = app.add_subcommand("panel", "Monte Carlo for the long-panel toy model");
  auto* rb = app.add_subcommand("robustness", "GE Monte Carlo over a varrho grid");
  auto* sr = app.add_subcommand("single-run", "one verbose replication of any model");

  FlagCapture cap_ge, cap_pf, cap_pr, cap_pn, cap_rb, cap_sr;
  register_config_flags(ge, cap_ge, true);
  register_config_flags(pf, cap_pf, true);
  register_config_flags(pr, cap_pr, true);
  register_config_flags(pn, cap_pn, true);
  register_config_flags(rb, cap_rb, true);
  register_config_flags(sr, cap_sr, false);
  std::string single_model = "ge";
  sr->add_option("--model", single_model, "model for the single run")
      ->check(CLI::IsMember({"ge", "portfolio", "production", "long_panel"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    MCConfig cfg;
    std::vector<aggshock::MonteCarloSummary> summaries;
    if (app.got_subcommand(ge)) {
      cfg.model = "ge";
      merge_into(cfg, cap_ge, ge);
      aggshock::ge_params_from(cfg);
      summaries.push_back(aggshock::run_ge_mc(cfg));
    } else if (app.got_subcommand(pf)) {
      cfg.model = "portfolio";
      merge_into(cfg, cap_pf, pf);
      aggshock::portfolio_params_from(cfg);
      summaries.push_back(aggshock::run_portfolio_mc(cfg));
    } else if (app.got_subcommand(pr)) {
      cfg.model = "production";
      cfg.n = 2000;
      cfg.tau = 5;
      cfg.reps = 200;
      merge_into(cfg, cap_pr, pr);
      aggshock::production_params_from(cfg);
      summaries.push_back(aggshock::run_production_mc(cfg));
    } else if (app.got_subcommand(pn)) {
      cfg.model = "long_panel";
      cfg.n = 100;
      cfg.tau = 50;
      merge_into(cfg, cap_pn, pn);
      aggshock::long_panel_params_from(cfg);
      summaries.push_back(aggshock::run_long_panel_mc(cfg));
    } else if (app.got_subcommand(rb)) {
      cfg.model = "ge";
      cfg.varrho_grid = {0.5, 0.75, 0.9};
      merge_into(cfg, cap_rb, rb);
      aggshock::ge_params_from(cfg);
      summaries = aggshock::run_robustness(cfg, cfg.varrho_grid);
    } else if (app.got_subcommand(sr)) {
      cfg.model = single_model;
      cfg.reps = 1;
      if (single_model == "production") {
        cfg.n = 2000;
        cfg.tau = 5;
      } else if (single_model == "long_panel") {
        cfg.n = 100;
        cfg.tau = 50;
      }
      merge_into(cfg, cap_sr, sr);
      cfg.reps = 1;
      summaries.push_back(aggshock::run_model_mc(cfg));
    }
    return emit_and_write(summaries, cfg);
  } catch (const aggshock::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fprintf(stderr, "run with --help for usage\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
