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
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robustbell/black_scholes.hpp"
#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/gp/surrogate.hpp"
#include "robustbell/numerics/quadrature.hpp"
#include "robustbell/parallel.hpp"
#include "robustbell/rng.hpp"
#include "robustbell/solver/bellman.hpp"
#include "robustbell/solver/design.hpp"

namespace robustbell {

enum class QuadratureKind { gauss_hermite, file, monte_carlo };

inline const char* to_string(QuadratureKind q) {
  switch (q) {
    case QuadratureKind::gauss_hermite: return "gauss_hermite";
    case QuadratureKind::file: return "file";
    case QuadratureKind::monte_carlo: return "monte_carlo";
  }
  return "?";
}

inline QuadratureKind quadrature_kind_from_string(const std::string& s) {
  if (s == "gauss_hermite") return QuadratureKind::gauss_hermite;
  if (s == "file") return QuadratureKind::file;
  if (s == "monte_carlo") return QuadratureKind::monte_carlo;
  throw ValidationError("unknown quadrature kind: " + s);
}

struct SolverConfig {
  SolverMode mode = SolverMode::adaptive_robust;
  std::optional<ModelParams> fixed_theta;  // fixed_parameter mode only

  // Design sizes. Portfolio: n_pilot paths span the hull, n_qmc + n_adaptive
  // sites per step. Hedging: n_pilot sites per step, of which n_qmc are hull
  // fill and n_edge adversarial-edge sites.
  int n_pilot = 250;
  int n_qmc = 100;
  int n_adaptive = 50;
  int n_edge = 25;

  QuadratureKind quadrature = QuadratureKind::gauss_hermite;
  int quadrature_size = 100;
  std::string quadrature_file;

  int phi_scan = 16;  // portfolio inner coarse scan
  int n_phi = 16;     // hedging inner grid
  int n_rho = 8;
  double inner_tol = 1e-6;
  double outer_tol = 1e-6;
  double flat_threshold = 1e-8;  // relative to the initial option price

  KernelFamily kernel = KernelFamily::matern52;
  double nugget = 1e-5;
  int gp_restarts = 5;
  int gp_max_evaluations = 200;
  bool warm_start = true;  // seed each step's fit with the previous step's hyperparameters
  bool freeze = false;     // reuse the first fitted hyperparameters at later steps

  std::uint64_t seed = 42;
  int threads = 0;
  std::string diagnostics_dir;
  bool verbose = false;

  int design_size(ProblemKind kind) const { return kind == ProblemKind::portfolio ? n_qmc + n_adaptive : n_pilot; }

  void validate(const ProblemSpec& spec) const {
    using detail::require;
    require(design_size(spec.kind) >= 10, "solver: design size must be >= 10");
    require(n_pilot >= 4, "solver.n_pilot must be >= 4");
    require(n_qmc >= 0 && n_adaptive >= 0 && n_edge >= 0, "solver: design sizes must be >= 0");
    if (spec.kind == ProblemKind::hedging && mode != SolverMode::fixed_parameter)
      require(n_qmc + n_edge < n_pilot, "solver: n_qmc + n_edge must be below n_pilot");
    if (quadrature != QuadratureKind::file) require(quadrature_size >= 2, "solver.quadrature_size must be >= 2");
    if (quadrature == QuadratureKind::file) require(!quadrature_file.empty(), "solver.quadrature_file is required");
    require(phi_scan >= 2, "solver.phi_scan must be >= 2");
    require(n_phi >= 1 && n_rho >= 0, "solver: inner grid sizes must be positive");
    require(inner_tol > 0.0 && outer_tol > 0.0, "solver: tolerances must be > 0");
    require(flat_threshold >= 0.0, "solver.flat_threshold must be >= 0");
    require(nugget > 0.0, "solver.nugget must be > 0");
    require(gp_restarts >= 1 && gp_max_evaluations >= 10, "solver: gp search budget too small");
    if (mode == SolverMode::fixed_parameter) {
      require(fixed_theta.has_value(), "solver.fixed_theta is required in fixed_parameter mode");
      require(fixed_theta->sigma > 0.0, "solver.fixed_theta sigma must be > 0");
    }
  }
};

struct SiteRecord {
  double v = 0.0;
  double u = 0.0;  // optimiser on the relaxed domain
  std::optional<double> phi;
  std::optional<double> rho;
  ModelParams theta{};
  bool flat = false;
};

struct StepSolution {
  int k = 0;
  Design design;
  std::vector<SiteRecord> records;
  std::optional<GpSurrogate> value_surrogate;
  std::optional<GpSurrogate> control_surrogate;
  double seconds = 0.0;  // wall time; reported in the run manifest, not persisted
};

/// Shock grid shared by all sites, or a fresh Monte Carlo grid per (k, site).
inline ShockGrid solver_shocks(const SolverConfig& cfg) {
  switch (cfg.quadrature) {
    case QuadratureKind::gauss_hermite: return gaussian_rule(cfg.quadrature_size).shocks();
    case QuadratureKind::file: return load_rule(cfg.quadrature_file).shocks();
    case QuadratureKind::monte_carlo: return {};
  }
  return {};
}

inline ShockGrid site_shocks(const SolverConfig& cfg, int k, std::size_t site) {
  Rng rng = make_rng(cfg.seed, "mc_shocks", static_cast<std::uint64_t>(k) * 1000003ULL + site);
  return monte_carlo_shocks(cfg.quadrature_size, rng);
}

/// Scale for the super-hedged test: the option price at the initial state.
inline double flat_scale(const ProblemSpec& spec, const SolverConfig& cfg) {
  if (spec.kind != ProblemKind::hedging) return 0.0;
  const double sigma = cfg.fixed_theta ? cfg.fixed_theta->sigma : spec.sigma_bar0;
  return bs_price(0.0, spec.S0, spec.strike, spec.r, sigma, spec.horizon());
}

/// Fitted surrogates for the interior steps together with everything needed to
/// evaluate or extend them.
struct PolicyBundle {
  ProblemSpec spec;
  SolverConfig config;
  ShockGrid shocks;  // empty for Monte Carlo quadrature
  std::vector<StepSolution> steps;  // steps[k - 1] for k = 1..K-1

  const StepSolution& step(int k) const {
    detail::require(k >= 1 && k < spec.K, "policy: step has no surrogate");
    return steps.at(static_cast<std::size_t>(k - 1));
  }

  /// V(t_k, .) for k in 1..K; the terminal condition at k = K.
  ValueFunction value_function(int k) const {
    if (k >= spec.K) return ValueFunction(spec, config.mode, nullptr);
    return ValueFunction(spec, config.mode, &*step(k).value_surrogate);
  }

  /// Projected control from the step-k control surrogate.
  double control(int k, const AugmentedState& x) const {
    const auto f = features(spec.kind, config.mode, x);
    return spec.control_domain.project(step(k).control_surrogate->predict_mean(f.span()));
  }

  /// Raw value surrogate prediction at step k.
  double value(int k, const AugmentedState& x) const {
    const auto f = features(spec.kind, config.mode, x);
    return step(k).value_surrogate->predict_mean(f.span());
  }

  /// Solves the one-step problem at x directly against V(t_{x.k + 1}, .).
  OuterResult optimize_at(const AugmentedState& x, std::size_t stream = 0) const {
    const ValueFunction next = value_function(x.k + 1);
    ShockGrid mc;
    if (config.quadrature == QuadratureKind::monte_carlo) mc = site_shocks(config, -1 - x.k, stream);
    SiteProblem p = make_site_problem(x, next, config.quadrature == QuadratureKind::monte_carlo ? mc : shocks);
    return outer_optimize(p, config.outer_tol);
  }

  SiteProblem make_site_problem(const AugmentedState& x, const ValueFunction& next, const ShockGrid& grid) const {
    SiteProblem p;
    p.spec = &spec;
    p.mode = config.mode;
    p.shocks = &grid;
    p.next = &next;
    p.state = x;
    p.set = site_uncertainty(spec, config.mode, x.beliefs, config.fixed_theta);
    p.inner_tol = config.inner_tol;
    p.phi_scan = config.phi_scan;
    p.n_phi = config.n_phi;
    p.n_rho = config.n_rho;
    p.flat_threshold = config.flat_threshold * flat_scale(spec, config);
    return p;
  }
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

inline void write_step_csv(const ProblemSpec& spec, const StepSolution& s, std::ostream& out) {
  out << std::setprecision(17);
  if (spec.kind == ProblemKind::portfolio)
    out << "k,site,provenance,mu_bar,sigma_bar,n_eff,v,u_check,phi_check,rho_check,mu_check,sigma_check,flat\n";
  else
    out << "k,site,provenance,S,W,mu_bar,sigma_bar,n_eff,v,u_check,phi_check,rho_check,mu_check,sigma_check,flat\n";
  for (std::size_t i = 0; i < s.design.size(); ++i) {
    const auto& x = s.design.sites[i];
    const auto& r = s.records[i];
    out << s.k << ',' << i << ',' << to_string(s.design.provenance[i]) << ',';
    if (spec.kind == ProblemKind::hedging) out << x.stock() << ',' << x.hedge_wealth() << ',';
    out << x.beliefs.mu_bar << ',' << x.beliefs.sigma_bar << ',' << x.beliefs.n_eff << ',' << r.v << ',' << r.u << ',';
    if (r.phi) out << *r.phi;
    out << ',';
    if (r.rho) out << *r.rho;
    out << ',' << r.theta.mu << ',' << r.theta.sigma << ',' << (r.flat ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Backward recursion
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> design_features(const ProblemSpec& spec, SolverMode mode, const Design& d) {
  std::vector<std::vector<double>> X;
  X.reserve(d.size());
  for (const auto& x : d.sites) {
    const auto f = features(spec.kind, mode, x);
    X.emplace_back(f.v.begin(), f.v.begin() + static_cast<std::ptrdiff_t>(f.n));
  }
  return X;
}

inline Design make_design(const ProblemSpec& spec, const SolverConfig& cfg, int k, const PilotPaths& pilots,
                          const StepSolution* prev) {
  if (spec.kind == ProblemKind::portfolio) {
    std::vector<AugmentedState> ps;
    std::vector<double> pu;
    if (prev) {
      ps = prev->design.sites;
      for (const auto& r : prev->records) pu.push_back(r.u);
    }
    return build_design_portfolio(spec, k, pilots, ps, pu, {cfg.n_qmc, cfg.n_adaptive}, cfg.seed);
  }
  if (cfg.mode == SolverMode::fixed_parameter)
    return build_design_hedging_fixed(spec, k, pilots, cfg.n_qmc, *cfg.fixed_theta, cfg.seed);
  return build_design_hedging(spec, k, pilots, {cfg.n_pilot, cfg.n_qmc, cfg.n_edge}, cfg.seed);
}

}  // namespace detail

/// Backward recursion over k = K-1..1: build the design, solve the one-step
/// robust problem at every site, and fit value and control surrogates. With
/// `hyper_template` the template's per-step hyperparameters are used frozen.
inline PolicyBundle solve(const ProblemSpec& spec, const SolverConfig& cfg,
                          const PolicyBundle* hyper_template = nullptr) {
  spec.validate();
  cfg.validate(spec);
  PolicyBundle bundle;
  bundle.spec = spec;
  bundle.config = cfg;
  bundle.shocks = solver_shocks(cfg);
  if (spec.K == 1) return bundle;

  const unsigned threads = resolve_threads(cfg.threads);
  PilotPaths pilots;
  if (spec.kind == ProblemKind::portfolio)
    pilots = simulate_pilots_portfolio(spec, cfg.n_pilot, cfg.seed);
  else
    pilots = simulate_pilots_hedging(spec, cfg.n_pilot, cfg.seed,
                                     cfg.mode == SolverMode::fixed_parameter ? cfg.fixed_theta : std::nullopt);

  bundle.steps.resize(static_cast<std::size_t>(spec.K - 1));
  std::optional<KernelSpec> value_hyper, control_hyper;
  for (int k = spec.K - 1; k >= 1; --k) {
    const auto t0 = std::chrono::steady_clock::now();
    StepSolution& s = bundle.steps[static_cast<std::size_t>(k - 1)];
    const StepSolution* prev = k + 1 < spec.K ? &bundle.steps[static_cast<std::size_t>(k)] : nullptr;
    s.k = k;
    try {
      s.design = detail::make_design(spec, cfg, k, pilots, prev);
    } catch (const ValidationError& e) {
      throw NumericError("step " + std::to_string(k) + ": design construction failed: " + e.what());
    }
    const ValueFunction next = bundle.value_function(k + 1);
    s.records.resize(s.design.size());
    parallel_for(s.design.size(), threads, [&](std::size_t i) {
      ShockGrid mc;
      if (cfg.quadrature == QuadratureKind::monte_carlo) mc = site_shocks(cfg, k, i);
      const SiteProblem p = bundle.make_site_problem(
          s.design.sites[i], next, cfg.quadrature == QuadratureKind::monte_carlo ? mc : bundle.shocks);
      OuterResult o;
      try {
        o = outer_optimize(p, cfg.outer_tol);
      } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(k) + ", site " + std::to_string(i) + ": " + e.what());
      }
      s.records[i] = {o.value, o.u, o.worst.phi, o.worst.rho, o.worst.theta, o.flat};
    });

    const auto X = detail::design_features(spec, cfg.mode, s.design);
    std::vector<double> v, u;
    for (const auto& r : s.records) {
      v.push_back(r.v);
      u.push_back(r.u);
    }
    FitOptions vo;
    vo.restarts = cfg.gp_restarts;
    vo.max_evaluations = cfg.gp_max_evaluations;
    vo.nugget = cfg.nugget;
    FitOptions uo = vo;
    uo.prior_mean = 0.0;
    std::optional<KernelSpec> vinit = cfg.warm_start ? value_hyper : std::nullopt;
    std::optional<KernelSpec> uinit = cfg.warm_start ? control_hyper : std::nullopt;
    if (hyper_template) {
      const auto& ts = hyper_template->step(k);
      vinit = ts.value_surrogate->kernel();
      uinit = ts.control_surrogate->kernel();
      vo.freeze = uo.freeze = true;
    } else if (cfg.freeze && value_hyper) {
      vinit = value_hyper;
      uinit = control_hyper;
      vo.freeze = uo.freeze = true;
    }
    try {
      s.value_surrogate = fit(X, v, cfg.kernel, vinit, vo);
      s.control_surrogate = fit(X, u, cfg.kernel, uinit, uo);
    } catch (const ValidationError& e) {
      throw NumericError("step " + std::to_string(k) + ": surrogate fit failed: " + e.what());
    }
    if (!value_hyper || !cfg.freeze) {
      value_hyper = s.value_surrogate->kernel();
      control_hyper = s.control_surrogate->kernel();
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.diagnostics_dir.empty()) {
      std::filesystem::create_directories(cfg.diagnostics_dir);
      const auto path = std::filesystem::path(cfg.diagnostics_dir) / ("design_k" + std::to_string(k) + ".csv");
      std::ofstream out(path);
      if (!out) throw IoError("cannot write " + path.string());
      write_step_csv(spec, s, out);
    }
    if (cfg.verbose)
      std::cerr << "step " << k << ": " << s.design.size() << " sites, " << std::fixed << std::setprecision(1)
                << s.seconds << " s\n";
  }
  return bundle;
}

/// Static robust variant: the uncertainty set stays at its initial position.
inline PolicyBundle static_robust_solve(const ProblemSpec& spec, SolverConfig cfg) {
  cfg.mode = SolverMode::static_robust;
  return solve(spec, cfg);
}

/// Re-runs the solver with seeds derived from cfg.seed and reports the
/// projected control at each probe state (probe.k selects the step).
inline std::vector<std::vector<double>> macro_replicate(const ProblemSpec& spec, const SolverConfig& cfg, int reps,
                                                        const std::vector<AugmentedState>& probes) {
  detail::require(reps >= 2, "macro_replicate: reps must be >= 2");
  for (const auto& x : probes)
    detail::require(x.k >= 1 && x.k < spec.K, "macro_replicate: probe step must lie in 1..K-1");
  std::vector<std::vector<double>> out;
  for (int r = 0; r < reps; ++r) {
    SolverConfig c = cfg;
    c.seed = substream_seed(cfg.seed, "macro_replicate", static_cast<std::uint64_t>(r));
    c.diagnostics_dir.clear();
    PolicyBundle b;
    try {
      b = solve(spec, c);
    } catch (const NumericError& e) {
      throw NumericError("replication " + std::to_string(r) + ": " + e.what());
    }
    std::vector<double> row;
    for (const auto& x : probes) row.push_back(b.control(x.k, x));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace robustbell
