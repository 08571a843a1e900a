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

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustbell/errors.hpp"
#include "robustbell/evaluator/evaluate.hpp"
#include "robustbell/solver/serialize.hpp"

namespace robustbell {

struct EvaluationConfig {
  std::vector<StrategyKind> strategies{StrategyKind::adaptive_robust};
  MeasureKind measure = MeasureKind::fixed;
  double mu_star = 0.15;  // fixed / sampled_normal mean
  double mu_sd = 0.02;
  double sigma_star = 0.1;
  int paths = 10000;
  std::uint64_t seed = 7;
  double constant_u = 0.0;
  std::optional<ModelParams> merton_theta;  // default: the initial point estimate
  int ma_grid_mu = 8;
  int ma_grid_sigma = 8;
  std::vector<double> lambdas{0.0, 0.5, 0.75};
  int bins = 50;

  TestMeasure test_measure(const ProblemSpec& spec) const {
    switch (measure) {
      case MeasureKind::fixed: return TestMeasure::fixed({mu_star, sigma_star});
      case MeasureKind::sampled_normal: return TestMeasure::sampled_normal(mu_star, mu_sd, sigma_star);
      case MeasureKind::sampled_uniform_set: return TestMeasure::sampled_uniform_set(spec);
    }
    return {};
  }
};

struct OutputConfig {
  std::string dir = "out";
  bool diagnostics = false;
  bool write_paths = true;
};

struct RunConfig {
  ProblemSpec problem;
  SolverConfig solver;
  EvaluationConfig evaluation;
  OutputConfig output;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(field + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(field + ": expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(field + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Parses the sectioned key = value format. Lines starting with '#' or ';'
/// are comments. Unknown sections and keys are rejected. Problem defaults
/// follow `kind`, which must therefore come first in [problem] if given.
inline RunConfig parse_config(std::istream& in) {
  using namespace detail;
  RunConfig c;
  std::optional<double> T;
  bool K_given = false;
  std::string section;
  std::string line;
  int lineno = 0;
  bool kind_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "solver" && section != "evaluation" && section != "output")
        throw ValidationError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ValidationError("line " + std::to_string(lineno) + ": key outside a section");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (const auto hash = val.find(" #"); hash != std::string::npos) val = trim(val.substr(0, hash));
    const std::string field = section + "." + key;
    auto num = [&] { return parse_double(field, val); };
    auto integer = [&] { return static_cast<int>(parse_int(field, val)); };
    bool known = true;

    if (section == "problem") {
      ProblemSpec& p = c.problem;
      if (key != "kind") kind_allowed = false;
      if (key == "kind") {
        if (!kind_allowed) throw ValidationError("problem.kind must be the first problem key");
        if (val == "portfolio") p = ProblemSpec::portfolio_defaults();
        else if (val == "hedging") p = ProblemSpec::hedging_defaults();
        else throw ValidationError("problem.kind: expected portfolio or hedging, got '" + val + "'");
      } else if (key == "r") p.r = num();
      else if (key == "T") T = num();
      else if (key == "dt") p.dt = num();
      else if (key == "K") { p.K = integer(); K_given = true; }
      else if (key == "gamma") p.gamma = num();
      else if (key == "strike") p.strike = num();
      else if (key == "lambda") p.loss.lambda = num();
      else if (key == "alpha") p.alpha = num();
      else if (key == "kappa") p.kappa_override = num();
      else if (key == "k0") p.k0 = integer();
      else if (key == "u_min") p.control_domain.lo = num();
      else if (key == "u_max") p.control_domain.hi = num();
      else if (key == "relaxed_min") p.relaxed_control_domain.lo = num();
      else if (key == "relaxed_max") p.relaxed_control_domain.hi = num();
      else if (key == "y0") p.y0 = num();
      else if (key == "S0") p.S0 = num();
      else if (key == "W0") p.W0 = num();
      else if (key == "mu_bar0") p.mu_bar0 = num();
      else if (key == "sigma_bar0") p.sigma_bar0 = num();
      else known = false;
    } else if (section == "solver") {
      SolverConfig& s = c.solver;
      if (key == "mode") s.mode = solver_mode_from_string(val);
      else if (key == "fixed_mu") s.fixed_theta = ModelParams{num(), s.fixed_theta ? s.fixed_theta->sigma : 0.0};
      else if (key == "fixed_sigma") s.fixed_theta = ModelParams{s.fixed_theta ? s.fixed_theta->mu : 0.0, num()};
      else if (key == "design_size") {
        // portfolio split 2:1 between hull fill and adaptive sites; hedging
        // total with 40% fill and 10% edge sites
        const int n = integer();
        require(n >= 10, "solver.design_size must be >= 10");
        s.n_qmc = (2 * n + 1) / 3;
        s.n_adaptive = n - s.n_qmc;
        s.n_pilot = std::max(s.n_pilot, n);
        if (c.problem.kind == ProblemKind::hedging) {
          s.n_pilot = n;
          s.n_qmc = (2 * n) / 5;
          s.n_edge = n / 10;
        }
      }
      else if (key == "n_pilot") s.n_pilot = integer();
      else if (key == "n_qmc") s.n_qmc = integer();
      else if (key == "n_adaptive") s.n_adaptive = integer();
      else if (key == "n_edge") s.n_edge = integer();
      else if (key == "quadrature") s.quadrature = quadrature_kind_from_string(val);
      else if (key == "quadrature_size") s.quadrature_size = integer();
      else if (key == "quadrature_file") s.quadrature_file = val;
      else if (key == "phi_scan") s.phi_scan = integer();
      else if (key == "n_phi") s.n_phi = integer();
      else if (key == "n_rho") s.n_rho = integer();
      else if (key == "inner_tol") s.inner_tol = num();
      else if (key == "outer_tol") s.outer_tol = num();
      else if (key == "flat_threshold") s.flat_threshold = num();
      else if (key == "kernel") s.kernel = kernel_family_from_string(val);
      else if (key == "nugget") s.nugget = num();
      else if (key == "gp_restarts") s.gp_restarts = integer();
      else if (key == "gp_max_evaluations") s.gp_max_evaluations = integer();
      else if (key == "warm_start") s.warm_start = parse_bool(field, val);
      else if (key == "freeze") s.freeze = parse_bool(field, val);
      else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(field, val));
      else if (key == "threads") s.threads = integer();
      else known = false;
    } else if (section == "evaluation") {
      EvaluationConfig& e = c.evaluation;
      if (key == "strategies") {
        e.strategies.clear();
        for (const auto& s : split_list(val)) e.strategies.push_back(strategy_kind_from_string(s));
      } else if (key == "measure") e.measure = measure_kind_from_string(val);
      else if (key == "mu_star") e.mu_star = num();
      else if (key == "mu_sd") e.mu_sd = num();
      else if (key == "sigma_star") e.sigma_star = num();
      else if (key == "paths") e.paths = integer();
      else if (key == "seed") e.seed = static_cast<std::uint64_t>(parse_int(field, val));
      else if (key == "constant_u") e.constant_u = num();
      else if (key == "merton_mu") e.merton_theta = ModelParams{num(), e.merton_theta ? e.merton_theta->sigma : 0.0};
      else if (key == "merton_sigma") e.merton_theta = ModelParams{e.merton_theta ? e.merton_theta->mu : 0.0, num()};
      else if (key == "ma_grid_mu") e.ma_grid_mu = integer();
      else if (key == "ma_grid_sigma") e.ma_grid_sigma = integer();
      else if (key == "lambdas") {
        e.lambdas.clear();
        for (const auto& s : split_list(val)) e.lambdas.push_back(parse_double(field, s));
      } else if (key == "bins") e.bins = integer();
      else known = false;
    } else if (section == "output") {
      if (key == "dir") c.output.dir = val;
      else if (key == "diagnostics") c.output.diagnostics = parse_bool(field, val);
      else if (key == "write_paths") c.output.write_paths = parse_bool(field, val);
      else known = false;
    }
    if (!known) throw ValidationError("unknown key " + field);
  }
  if (T) {
    const double k = *T / c.problem.dt;
    require(std::abs(k - std::round(k)) < 1e-9, "problem.T must be a multiple of problem.dt");
    const int K = static_cast<int>(std::round(k));
    require(!K_given || K == c.problem.K, "problem.K disagrees with problem.T / problem.dt");
    c.problem.K = K;
  }
  c.problem.validate();
  c.solver.validate(c.problem);
  const auto& e = c.evaluation;
  require(e.paths >= 1, "evaluation.paths must be >= 1");
  require(e.sigma_star > 0.0, "evaluation.sigma_star must be > 0");
  require(e.mu_sd >= 0.0, "evaluation.mu_sd must be >= 0");
  require(e.ma_grid_mu >= 1 && e.ma_grid_sigma >= 1, "evaluation: myopic grid sizes must be >= 1");
  require(e.bins >= 1, "evaluation.bins must be >= 1");
  require(!e.strategies.empty(), "evaluation.strategies must not be empty");
  for (auto s : e.strategies)
    if (s == StrategyKind::adaptive_delta)
      require(c.problem.kind == ProblemKind::hedging, "evaluation.strategies: adaptive_delta needs the hedging problem");
  if (e.merton_theta) require(e.merton_theta->sigma > 0.0, "evaluation.merton_sigma must be > 0");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  return parse_config(in);
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline nlohmann::json to_json(const EvaluationConfig& e) {
  nlohmann::json j;
  std::vector<std::string> s;
  for (auto k : e.strategies) s.push_back(to_string(k));
  j["strategies"] = s;
  j["measure"] = to_string(e.measure);
  j["mu_star"] = e.mu_star;
  j["mu_sd"] = e.mu_sd;
  j["sigma_star"] = e.sigma_star;
  j["paths"] = e.paths;
  j["seed"] = e.seed;
  j["constant_u"] = e.constant_u;
  j["merton_mu"] = e.merton_theta ? nlohmann::json(e.merton_theta->mu) : nlohmann::json(nullptr);
  j["merton_sigma"] = e.merton_theta ? nlohmann::json(e.merton_theta->sigma) : nlohmann::json(nullptr);
  j["ma_grid_mu"] = e.ma_grid_mu;
  j["ma_grid_sigma"] = e.ma_grid_sigma;
  j["lambdas"] = e.lambdas;
  j["bins"] = e.bins;
  return j;
}

inline EvaluationConfig evaluation_config_from_json(const nlohmann::json& j) {
  EvaluationConfig e;
  e.strategies.clear();
  for (const auto& s : j.at("strategies")) e.strategies.push_back(strategy_kind_from_string(s));
  e.measure = measure_kind_from_string(j.at("measure"));
  e.mu_star = j.at("mu_star");
  e.mu_sd = j.at("mu_sd");
  e.sigma_star = j.at("sigma_star");
  e.paths = j.at("paths");
  e.seed = j.at("seed");
  e.constant_u = j.at("constant_u");
  if (!j.at("merton_mu").is_null()) e.merton_theta = ModelParams{j.at("merton_mu"), j.at("merton_sigma")};
  e.ma_grid_mu = j.at("ma_grid_mu");
  e.ma_grid_sigma = j.at("ma_grid_sigma");
  e.lambdas = j.at("lambdas").get<std::vector<double>>();
  e.bins = j.at("bins");
  return e;
}

}  // namespace robustbell
