// Copyright 2026 The robustbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustbell/evaluator/evaluate.hpp"
#include "robustbell/io/config.hpp"
#include "robustbell/numerics/quadrature.hpp"
#include "robustbell/solver/serialize.hpp"
#include "robustbell/version.hpp"

namespace robustbell::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("missing artifact: " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed document " + p.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

inline void ensure_dir(const fs::path& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw IoError("cannot create directory " + d.string() + ": " + ec.message());
}

inline json config_echo(const RunConfig& c) {
  return {{"problem", to_json(c.problem)},
          {"solver", to_json(c.solver)},
          {"evaluation", to_json(c.evaluation)},
          {"output", {{"dir", c.output.dir}, {"diagnostics", c.output.diagnostics}, {"write_paths", c.output.write_paths}}}};
}

inline bool needs_policy(StrategyKind s) {
  return s == StrategyKind::adaptive_robust || s == StrategyKind::static_robust;
}

inline std::string policy_file(StrategyKind s) { return std::string("policy_") + to_string(s) + ".json"; }

inline std::vector<ModelParams> myopic_grid(const RunConfig& c) {
  return theta_grid(c.problem, c.evaluation.ma_grid_mu, c.evaluation.ma_grid_sigma);
}

/// Solves every policy the configured strategies need and writes the run
/// artifact: manifest.json, policy_<strategy>.json, myopic_table.json.
inline json cmd_solve(const RunConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  json timings = json::object();
  json files = json::array();
  for (StrategyKind s : cfg.evaluation.strategies) {
    const auto t0 = std::chrono::steady_clock::now();
    SolverConfig sc = cfg.solver;
    if (cfg.output.diagnostics) sc.diagnostics_dir = (out_dir / "diagnostics" / to_string(s)).string();
    if (needs_policy(s)) {
      if (s == StrategyKind::static_robust) sc.mode = SolverMode::static_robust;
      const PolicyBundle b = solve(cfg.problem, sc);
      write_json(out_dir / policy_file(s), to_json(b));
      files.push_back(policy_file(s));
      json steps = json::array();
      for (const auto& st : b.steps) steps.push_back({{"k", st.k}, {"seconds", st.seconds}});
      timings[std::string(to_string(s)) + "_steps"] = steps;
    } else if (s == StrategyKind::myopic_adaptive) {
      sc.diagnostics_dir.clear();
      const MyopicTable t = myopic_adaptive_table(cfg.problem, myopic_grid(cfg), sc);
      write_json(out_dir / "myopic_table.json", to_json(t));
      files.push_back("myopic_table.json");
    }
    timings[to_string(s)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  json manifest;
  manifest["format"] = "robustbell.run";
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.solver.seed;
  manifest["config"] = config_echo(cfg);
  manifest["timings"] = timings;
  manifest["files"] = files;
  write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

struct LoadedRun {
  json manifest;
  ProblemSpec problem;
  EvaluationConfig evaluation;
};

inline LoadedRun load_run(const fs::path& dir) {
  LoadedRun r;
  r.manifest = read_json(dir / "manifest.json");
  if (r.manifest.value("format", "") != "robustbell.run") throw IoError("not a run artifact: " + dir.string());
  if (r.manifest.value("version", "") != kVersion)
    throw IoError("artifact version mismatch: " + r.manifest.value("version", std::string("?")) + " vs " + kVersion);
  try {
    r.problem = problem_from_json(r.manifest.at("config").at("problem"));
    r.evaluation = evaluation_config_from_json(r.manifest.at("config").at("evaluation"));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  return r;
}

/// Evaluates each configured strategy on a solved artifact; writes
/// report_<s>.json, paths_<s>.csv and histogram_<s>.csv into out_dir.
inline json cmd_evaluate(const fs::path& artifact, const std::optional<EvaluationConfig>& override_eval,
                         const fs::path& out_dir, int threads = 0, bool write_paths = true) {
  const LoadedRun run = load_run(artifact);
  const EvaluationConfig ev = override_eval.value_or(run.evaluation);
  const ProblemSpec& spec = run.problem;
  ensure_dir(out_dir);
  const TestMeasure measure = ev.test_measure(spec);
  EvalOptions opt;
  opt.paths = ev.paths;
  opt.seed = ev.seed;
  opt.threads = threads;
  opt.bins = ev.bins;
  json all = json::array();
  for (StrategyKind s : ev.strategies) {
    std::optional<PolicyBundle> bundle;
    std::optional<MyopicTable> table;
    Strategy st;
    if (needs_policy(s)) {
      bundle = policy_from_json(read_json(artifact / policy_file(s)));
      st = s == StrategyKind::adaptive_robust ? Strategy::adaptive_robust(*bundle) : Strategy::static_robust(*bundle);
    } else if (s == StrategyKind::myopic_adaptive) {
      table = myopic_table_from_json(read_json(artifact / "myopic_table.json"));
      st = Strategy::myopic_adaptive(*table);
    } else if (s == StrategyKind::adaptive_delta) {
      st = Strategy::adaptive_delta();
    } else if (s == StrategyKind::merton_static) {
      st = Strategy::merton_static(ev.merton_theta.value_or(ModelParams{spec.mu_bar0, spec.sigma_bar0}));
    } else {
      st = Strategy::constant(ev.constant_u);
    }
    const EvalReport rep = evaluate(st, spec, measure, spec.initial_state(), opt);
    json summary = summary_json(rep);
    summary["lambda"] = spec.loss.lambda;
    summary["measure"] = to_string(ev.measure);
    summary["problem"] = to_json(spec);
    summary["evaluation"] = to_json(ev);
    summary["version"] = kVersion;
    const std::string name = to_string(s);
    write_json(out_dir / ("report_" + name + ".json"), summary);
    if (write_paths) {
      auto p = open_out(out_dir / ("paths_" + name + ".csv"));
      write_paths_csv(rep, p);
    }
    auto h = open_out(out_dir / ("histogram_" + name + ".csv"));
    write_histogram_csv(rep, h);
    all.push_back(summary);
  }
  return all;
}

/// Combines report summaries from several artifacts into one table with a row
/// per (method, lambda). Problems must agree apart from lambda.
inline std::vector<json> cmd_compare(const std::vector<fs::path>& dirs, const std::vector<double>& lambdas,
                                     const fs::path& out_csv) {
  if (dirs.size() < 2) throw ValidationError("compare: need >= 2 artifacts");
  detail::require(!lambdas.empty(), "compare: lambda list must not be empty");
  std::optional<json> ref;
  std::vector<std::pair<double, json>> reports;
  for (const auto& d : dirs) {
    const LoadedRun run = load_run(d);
    json key = to_json(run.problem);
    key.erase("lambda");
    if (!ref) ref = key;
    else if (*ref != key) throw ValidationError("compare: inconsistent problem specs across artifacts (" + d.string() + ")");
    bool any = false;
    for (const auto& e : fs::directory_iterator(d)) {
      const std::string n = e.path().filename().string();
      if (n.rfind("report_", 0) == 0 && e.path().extension() == ".json") {
        reports.emplace_back(run.problem.loss.lambda, read_json(e.path()));
        any = true;
      }
    }
    if (!any) throw IoError("compare: no evaluation reports in " + d.string());
  }
  std::vector<json> rows;
  for (double lam : lambdas) {
    std::map<std::string, json> by_method;
    for (const auto& [l, j] : reports)
      if (std::abs(l - lam) < 1e-12) by_method[j.at("strategy").get<std::string>()] = j;
    if (by_method.empty()) throw ValidationError("compare: no artifact solved with lambda = " + std::to_string(lam));
    for (const auto& [m, j] : by_method)
      rows.push_back({{"method", m}, {"lambda", lam}, {"mean", j.at("mean")}, {"std", j.at("std")},
                      {"q95", j.at("q95")}, {"V0", j.at("V0")}});
  }
  auto out = open_out(out_csv);
  out << std::setprecision(10) << "method,lambda,mean,std,q95,V0\n";
  for (const auto& r : rows) {
    out << r["method"].get<std::string>() << ',' << r["lambda"].get<double>() << ',' << r["mean"].get<double>() << ',';
    if (!r["std"].is_null()) out << r["std"].get<double>();
    out << ',' << r["q95"].get<double>() << ',' << r["V0"].get<double>() << '\n';
  }
  return rows;
}

/// Probe states for the stability study. Portfolio: t = 0.8, sigma_bar^2 =
/// 0.01 over a mu_bar grid. Hedging: mid-horizon, beliefs at the initial
/// estimate, wealth at the Black-Scholes price, over a stock grid.
inline std::vector<AugmentedState> stability_probes(const ProblemSpec& spec) {
  std::vector<AugmentedState> probes;
  if (spec.kind == ProblemKind::portfolio) {
    const int k = std::clamp(static_cast<int>(std::lround(0.8 / spec.dt)), 1, std::max(1, spec.K - 1));
    for (int i = 0; i <= 8; ++i)
      probes.push_back(AugmentedState::portfolio(spec.y0, Beliefs{-0.05 + 0.05 * i, 0.1, k + spec.k0}, k));
  } else {
    const int k = std::max(1, spec.K / 2);
    for (int i = 0; i <= 8; ++i) {
      const double S = spec.strike * (0.8 + 0.05 * i);
      const double P = bs_price(k * spec.dt, S, spec.strike, spec.r, spec.sigma_bar0, spec.horizon());
      probes.push_back(AugmentedState::hedging(S, P, Beliefs{spec.mu_bar0, spec.sigma_bar0, k + spec.k0}, k));
    }
  }
  return probes;
}

inline SolverConfig with_design_size(const ProblemSpec& spec, SolverConfig c, int n) {
  detail::require(n >= 10, "stability: design sizes must be >= 10");
  if (spec.kind == ProblemKind::portfolio) {
    c.n_qmc = (2 * n + 1) / 3;
    c.n_adaptive = n - c.n_qmc;
  } else {
    c.n_pilot = n;
    c.n_qmc = (2 * n) / 5;
    c.n_edge = n / 10;
  }
  return c;
}

/// Macro-replication study: per design size, reps re-solves; writes raw
/// predictions and per-probe box statistics.
inline json cmd_stability(const RunConfig& cfg, int reps, const std::vector<int>& sizes, const fs::path& out_dir) {
  detail::require(reps >= 2, "stability: reps must be >= 2");
  detail::require(!sizes.empty(), "stability: need at least one design size");
  detail::require(cfg.problem.K >= 2, "stability: need K >= 2");
  ensure_dir(out_dir);
  const auto probes = stability_probes(cfg.problem);
  auto raw = open_out(out_dir / "stability_raw.csv");
  auto box = open_out(out_dir / "stability_box.csv");
  raw << std::setprecision(17) << "N,rep,probe,k,coordinate,u\n";
  box << std::setprecision(17) << "N,probe,k,coordinate,min,q25,median,q75,max\n";
  const bool port = cfg.problem.kind == ProblemKind::portfolio;
  json out = json::array();
  for (int n : sizes) {
    const SolverConfig sc = with_design_size(cfg.problem, cfg.solver, n);
    const auto preds = macro_replicate(cfg.problem, sc, reps, probes);
    for (std::size_t r = 0; r < preds.size(); ++r)
      for (std::size_t p = 0; p < probes.size(); ++p)
        raw << n << ',' << r << ',' << p << ',' << probes[p].k << ','
            << (port ? probes[p].beliefs.mu_bar : probes[p].stock()) << ',' << preds[r][p] << '\n';
    for (std::size_t p = 0; p < probes.size(); ++p) {
      std::vector<double> col;
      for (const auto& row : preds) col.push_back(row[p]);
      box << n << ',' << p << ',' << probes[p].k << ',' << (port ? probes[p].beliefs.mu_bar : probes[p].stock()) << ','
          << quantile(col, 0.0) << ',' << quantile(col, 0.25) << ',' << quantile(col, 0.5) << ','
          << quantile(col, 0.75) << ',' << quantile(col, 1.0) << '\n';
    }
    out.push_back({{"N", n}, {"predictions", preds}});
  }
  return out;
}

inline void cmd_quantizer(int size, const fs::path& out_csv) {
  const QuadratureRule rule = gaussian_rule(size);
  auto out = open_out(out_csv);
  save_rule_csv(rule, out);
}

}  // namespace robustbell::cli
