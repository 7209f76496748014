#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggshock/config.hpp"
#include "aggshock/errors.hpp"
#include "aggshock/experiments.hpp"

namespace aggshock {

namespace report_detail {

inline std::string real6(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// RFC-4180: quote when the field holds a comma, quote, or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

}  // namespace report_detail

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

inline std::string emit_csv(const std::vector<MonteCarloSummary>& summaries,
                            const ConfigEcho& meta) {
  using report_detail::csv_field;
  using report_detail::real6;
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + " = " + v + "\n";
  out +=
      "spec_id,model,n,tau,reps,policy,parameter,true_value,mean_estimate,"
      "bias,coverage_90,theta_incidents,reps_used,seed\n";
  for (const auto& s : summaries)
    for (const auto& row : s.rows) {
      out += csv_field(s.spec_id) + "," + csv_field(s.model) + "," +
             std::to_string(s.n) + "," + std::to_string(s.tau) + "," +
             std::to_string(s.reps) + "," + csv_field(s.policy) + "," +
             csv_field(row.parameter) + "," + real6(row.true_value) + "," +
             real6(row.mean_estimate) + "," + real6(row.bias) + "," +
             real6(row.coverage_90) + "," + std::to_string(row.theta_incidents) +
             "," + std::to_string(row.reps_used) + "," + std::to_string(s.seed) +
             "\n";
    }
  return out;
}

inline nlohmann::ordered_json summary_to_json(const MonteCarloSummary& s) {
  nlohmann::ordered_json j;
  j["spec_id"] = s.spec_id;
  j["model"] = s.model;
  j["policy"] = s.policy;
  j["n"] = s.n;
  j["tau"] = s.tau;
  j["reps"] = s.reps;
  j["seed"] = s.seed;
  j["failures"] = s.failures;
  j["failure_log"] = s.failure_log;
  j["v_psd_violations"] = s.v_psd_violations;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : s.rows) {
    nlohmann::ordered_json rj;
    rj["parameter"] = row.parameter;
    rj["true_value"] = row.true_value;
    rj["mean_estimate"] = row.mean_estimate;
    rj["bias"] = row.bias;
    if (std::isnan(row.coverage_90))
      rj["coverage_90"] = nullptr;
    else
      rj["coverage_90"] = row.coverage_90;
    rj["theta_incidents"] = row.theta_incidents;
    rj["reps_used"] = row.reps_used;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

inline MonteCarloSummary summary_from_json(const nlohmann::ordered_json& j) {
  MonteCarloSummary s;
  s.spec_id = j.at("spec_id").get<std::string>();
  s.model = j.at("model").get<std::string>();
  s.policy = j.at("policy").get<std::string>();
  s.n = j.at("n").get<long>();
  s.tau = j.at("tau").get<long>();
  s.reps = j.at("reps").get<long>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.failures = j.at("failures").get<long>();
  s.failure_log = j.at("failure_log").get<std::vector<std::string>>();
  s.v_psd_violations = j.at("v_psd_violations").get<long>();
  for (const auto& rj : j.at("rows")) {
    ParamSummary row;
    row.parameter = rj.at("parameter").get<std::string>();
    row.true_value = rj.at("true_value").get<double>();
    row.mean_estimate = rj.at("mean_estimate").get<double>();
    row.bias = rj.at("bias").get<double>();
    row.coverage_90 = rj.at("coverage_90").is_null()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : rj.at("coverage_90").get<double>();
    row.theta_incidents = rj.at("theta_incidents").get<long>();
    row.reps_used = rj.at("reps_used").get<long>();
    s.rows.push_back(row);
  }
  return s;
}

inline std::string emit_json(const std::vector<MonteCarloSummary>& summaries,
                             const ConfigEcho& meta) {
  nlohmann::ordered_json j;
  auto mj = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta) mj[k] = v;
  j["meta"] = mj;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : summaries) arr.push_back(summary_to_json(s));
  j["summaries"] = arr;
  return j.dump(2) + "\n";
}

inline std::string emit_markdown(const std::vector<MonteCarloSummary>& summaries,
                                 const ConfigEcho& meta) {
  using report_detail::real6;
  std::string out;
  for (const auto& [k, v] : meta) out += "<!-- " + k + " = " + v + " -->\n";
  for (const auto& s : summaries) {
    out += "\n## " + s.spec_id + "\n\n";
    out += "model " + s.model + ", n=" + std::to_string(s.n) +
           ", tau=" + std::to_string(s.tau) + ", reps=" + std::to_string(s.reps) +
           ", policy=" + s.policy + ", seed=" + std::to_string(s.seed) + "\n\n";
    out +=
        "| parameter | true value | mean estimate | bias | coverage 90% | "
        "incidents | reps used |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const auto& row : s.rows) {
      const bool bold = row.parameter == "mu";
      const std::string name =
          bold ? "**" + row.parameter + "**" : row.parameter;
      out += "| " + name + " | " + real6(row.true_value) + " | " +
             real6(row.mean_estimate) + " | " + real6(row.bias) + " | " +
             real6(row.coverage_90) + " | " + std::to_string(row.theta_incidents) +
             " | " + std::to_string(row.reps_used) + " |\n";
    }
  }
  return out;
}

inline std::string emit_table(const std::vector<MonteCarloSummary>& summaries,
                              const ConfigEcho& meta, const std::string& format) {
  if (format == "csv") return emit_csv(summaries, meta);
  if (format == "json") return emit_json(summaries, meta);
  if (format == "markdown") return emit_markdown(summaries, meta);
  throw DomainError("unknown output format: " + format);
}

// "-" writes to stdout; anything else is a file path.
inline void write_output(const std::string& content, const std::string& out_path) {
  if (out_path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot open output file: " + out_path);
  f << content;
  if (!f) throw IoError("failed writing output file: " + out_path);
}

}  // namespace aggshock
