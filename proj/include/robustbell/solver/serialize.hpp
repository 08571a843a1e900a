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

#include <string>

#include <nlohmann/json.hpp>

#include "robustbell/evaluator/strategies.hpp"
#include "robustbell/solver/solve.hpp"
#include "robustbell/version.hpp"

namespace robustbell {

using nlohmann::json;

inline json to_json(const ProblemSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["r"] = s.r;
  j["dt"] = s.dt;
  j["K"] = s.K;
  j["gamma"] = s.gamma;
  j["strike"] = s.strike;
  j["lambda"] = s.loss.lambda;
  j["alpha"] = s.alpha;
  j["kappa"] = s.kappa_override ? json(*s.kappa_override) : json(nullptr);
  j["k0"] = s.k0;
  j["u_min"] = s.control_domain.lo;
  j["u_max"] = s.control_domain.hi;
  j["relaxed_min"] = s.relaxed_control_domain.lo;
  j["relaxed_max"] = s.relaxed_control_domain.hi;
  j["y0"] = s.y0;
  j["S0"] = s.S0;
  j["W0"] = s.W0;
  j["mu_bar0"] = s.mu_bar0;
  j["sigma_bar0"] = s.sigma_bar0;
  return j;
}

inline ProblemSpec problem_from_json(const json& j) {
  ProblemSpec s;
  s.kind = j.at("kind").get<std::string>() == "hedging" ? ProblemKind::hedging : ProblemKind::portfolio;
  s.r = j.at("r");
  s.dt = j.at("dt");
  s.K = j.at("K");
  s.gamma = j.at("gamma");
  s.strike = j.at("strike");
  s.loss.lambda = j.at("lambda");
  s.alpha = j.at("alpha");
  if (!j.at("kappa").is_null()) s.kappa_override = j.at("kappa").get<double>();
  s.k0 = j.at("k0");
  s.control_domain = {j.at("u_min"), j.at("u_max")};
  s.relaxed_control_domain = {j.at("relaxed_min"), j.at("relaxed_max")};
  s.y0 = j.at("y0");
  s.S0 = j.at("S0");
  s.W0 = j.at("W0");
  s.mu_bar0 = j.at("mu_bar0");
  s.sigma_bar0 = j.at("sigma_bar0");
  s.validate();
  return s;
}

inline json to_json(const SolverConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["fixed_mu"] = c.fixed_theta ? json(c.fixed_theta->mu) : json(nullptr);
  j["fixed_sigma"] = c.fixed_theta ? json(c.fixed_theta->sigma) : json(nullptr);
  j["n_pilot"] = c.n_pilot;
  j["n_qmc"] = c.n_qmc;
  j["n_adaptive"] = c.n_adaptive;
  j["n_edge"] = c.n_edge;
  j["quadrature"] = to_string(c.quadrature);
  j["quadrature_size"] = c.quadrature_size;
  j["quadrature_file"] = c.quadrature_file;
  j["phi_scan"] = c.phi_scan;
  j["n_phi"] = c.n_phi;
  j["n_rho"] = c.n_rho;
  j["inner_tol"] = c.inner_tol;
  j["outer_tol"] = c.outer_tol;
  j["flat_threshold"] = c.flat_threshold;
  j["kernel"] = to_string(c.kernel);
  j["nugget"] = c.nugget;
  j["gp_restarts"] = c.gp_restarts;
  j["gp_max_evaluations"] = c.gp_max_evaluations;
  j["warm_start"] = c.warm_start;
  j["freeze"] = c.freeze;
  j["seed"] = c.seed;
  return j;
}

inline SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  c.mode = solver_mode_from_string(j.at("mode"));
  if (!j.at("fixed_mu").is_null()) c.fixed_theta = ModelParams{j.at("fixed_mu"), j.at("fixed_sigma")};
  c.n_pilot = j.at("n_pilot");
  c.n_qmc = j.at("n_qmc");
  c.n_adaptive = j.at("n_adaptive");
  c.n_edge = j.at("n_edge");
  c.quadrature = quadrature_kind_from_string(j.at("quadrature"));
  c.quadrature_size = j.at("quadrature_size");
  c.quadrature_file = j.at("quadrature_file");
  c.phi_scan = j.at("phi_scan");
  c.n_phi = j.at("n_phi");
  c.n_rho = j.at("n_rho");
  c.inner_tol = j.at("inner_tol");
  c.outer_tol = j.at("outer_tol");
  c.flat_threshold = j.at("flat_threshold");
  c.kernel = kernel_family_from_string(j.at("kernel"));
  c.nugget = j.at("nugget");
  c.gp_restarts = j.at("gp_restarts");
  c.gp_max_evaluations = j.at("gp_max_evaluations");
  c.warm_start = j.at("warm_start");
  c.freeze = j.at("freeze");
  c.seed = j.at("seed");
  return c;
}

inline json to_json(const PolicyBundle& b) {
  json j;
  j["format"] = "robustbell.policy";
  j["version"] = kVersion;
  j["problem"] = to_json(b.spec);
  j["solver"] = to_json(b.config);
  j["quadrature"] = {{"knots", b.shocks.knots}, {"weights", b.shocks.weights}};
  json steps = json::array();
  for (const auto& s : b.steps) {
    json js;
    js["k"] = s.k;
    js["value_surrogate"] = s.value_surrogate->to_json();
    js["control_surrogate"] = s.control_surrogate->to_json();
    json sites = json::array();
    for (std::size_t i = 0; i < s.design.size(); ++i) {
      const auto& x = s.design.sites[i];
      const auto& r = s.records[i];
      sites.push_back({{"market", {x.market[0], x.market[1]}},
                       {"mu_bar", x.beliefs.mu_bar},
                       {"sigma_bar", x.beliefs.sigma_bar},
                       {"n_eff", x.beliefs.n_eff},
                       {"provenance", to_string(s.design.provenance[i])},
                       {"v", r.v},
                       {"u", r.u},
                       {"phi", r.phi ? json(*r.phi) : json(nullptr)},
                       {"rho", r.rho ? json(*r.rho) : json(nullptr)},
                       {"mu_check", r.theta.mu},
                       {"sigma_check", r.theta.sigma},
                       {"flat", r.flat}});
    }
    js["sites"] = std::move(sites);
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline Provenance provenance_from_string(const std::string& s) {
  for (auto p : {Provenance::pilot, Provenance::qmc_fill, Provenance::adaptive, Provenance::adversarial_edge})
    if (s == to_string(p)) return p;
  throw ValidationError("unknown provenance: " + s);
}

inline PolicyBundle policy_from_json(const json& j) {
  if (j.value("format", "") != "robustbell.policy") throw IoError("not a policy document");
  if (j.value("version", "") != kVersion)
    throw IoError("policy version mismatch: " + j.value("version", std::string("?")) + " vs " + kVersion);
  PolicyBundle b;
  b.spec = problem_from_json(j.at("problem"));
  b.config = solver_config_from_json(j.at("solver"));
  b.shocks.knots = j.at("quadrature").at("knots").get<std::vector<double>>();
  b.shocks.weights = j.at("quadrature").at("weights").get<std::vector<double>>();
  for (const auto& js : j.at("steps")) {
    StepSolution s;
    s.k = js.at("k");
    s.design.k = s.k;
    s.value_surrogate = GpSurrogate::from_json(js.at("value_surrogate"));
    s.control_surrogate = GpSurrogate::from_json(js.at("control_surrogate"));
    for (const auto& site : js.at("sites")) {
      AugmentedState x;
      x.market = {site.at("market")[0].get<double>(), site.at("market")[1].get<double>()};
      x.beliefs = {site.at("mu_bar"), site.at("sigma_bar"), site.at("n_eff")};
      x.k = s.k;
      s.design.add(x, provenance_from_string(site.at("provenance")));
      SiteRecord r;
      r.v = site.at("v");
      r.u = site.at("u");
      if (!site.at("phi").is_null()) r.phi = site.at("phi").get<double>();
      if (!site.at("rho").is_null()) r.rho = site.at("rho").get<double>();
      r.theta = {site.at("mu_check"), site.at("sigma_check")};
      r.flat = site.at("flat");
      s.records.push_back(r);
    }
    b.steps.push_back(std::move(s));
  }
  if (static_cast<int>(b.steps.size()) != std::max(0, b.spec.K - 1)) throw IoError("policy: step count mismatch");
  return b;
}

inline json to_json(const MyopicTable& t) {
  json j;
  j["format"] = "robustbell.myopic_table";
  j["version"] = kVersion;
  j["problem"] = to_json(t.spec());
  json nodes = json::array();
  for (const auto& th : t.nodes()) nodes.push_back({th.mu, th.sigma});
  j["nodes"] = std::move(nodes);
  json pols = json::array();
  for (const auto& b : t.bundles()) pols.push_back(to_json(b));
  j["policies"] = std::move(pols);
  return j;
}

inline MyopicTable myopic_table_from_json(const json& j) {
  if (j.value("format", "") != "robustbell.myopic_table") throw IoError("not a myopic table document");
  if (j.value("version", "") != kVersion) throw IoError("myopic table version mismatch");
  std::vector<ModelParams> nodes;
  for (const auto& n : j.at("nodes")) nodes.push_back({n[0].get<double>(), n[1].get<double>()});
  std::vector<PolicyBundle> bundles;
  for (const auto& p : j.at("policies")) bundles.push_back(policy_from_json(p));
  return MyopicTable(problem_from_json(j.at("problem")), std::move(nodes), std::move(bundles));
}

}  // namespace robustbell
