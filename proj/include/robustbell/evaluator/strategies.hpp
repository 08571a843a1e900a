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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robustbell/black_scholes.hpp"
#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/gp/surrogate.hpp"
#include "robustbell/parallel.hpp"
#include "robustbell/solver/solve.hpp"

namespace robustbell {

/// Unconstrained Merton fraction (mu - r) / (gamma sigma^2).
inline double merton_control(const ModelParams& theta, double r, double gamma) {
  detail::require(theta.sigma > 0.0, "merton_control: sigma must be > 0");
  detail::require(gamma > 0.0, "merton_control: gamma must be > 0");
  return (theta.mu - r) / (gamma * theta.sigma * theta.sigma);
}

/// Rectangular parameter grid over the bounding box of the initial
/// uncertainty set, mu-major.
inline std::vector<ModelParams> theta_grid(const ProblemSpec& spec, int n_mu, int n_sigma) {
  detail::require(n_mu >= 1 && n_sigma >= 1, "theta_grid: sizes must be >= 1");
  const Beliefs b = spec.initial_beliefs();
  const double kappa = spec.kappa();
  const double half_mu = std::sqrt(kappa / (b.n_eff * spec.dt)) * b.sigma_bar;
  const double w = std::sqrt(2.0 * kappa / b.n_eff);
  const double s_lo = b.sigma_bar * std::sqrt(std::max(0.05, 1.0 - w));
  const double s_hi = b.sigma_bar * std::sqrt(1.0 + w);
  auto at = [](double lo, double hi, int i, int n) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };
  std::vector<ModelParams> g;
  for (int i = 0; i < n_mu; ++i)
    for (int j = 0; j < n_sigma; ++j)
      g.push_back({at(b.mu_bar - half_mu, b.mu_bar + half_mu, i, n_mu), at(s_lo, s_hi, j, n_sigma)});
  return g;
}

/// Controls computed for a known parameter at each grid node, interpolated
/// across the parameter plane at the current point estimate. Portfolio nodes
/// use the projected Merton fraction; hedging nodes hold fixed-parameter
/// Bellman solutions.
class MyopicTable {
 public:
  MyopicTable(ProblemSpec spec, std::vector<ModelParams> nodes, std::vector<PolicyBundle> bundles)
      : spec_(std::move(spec)), nodes_(std::move(nodes)), bundles_(std::move(bundles)) {
    detail::require(!nodes_.empty(), "myopic table: empty grid");
    if (spec_.kind == ProblemKind::hedging)
      detail::require(bundles_.size() == nodes_.size(), "myopic table: one solution per node required");
    if (nodes_.size() >= 2) {
      std::vector<std::vector<double>> X;
      for (const auto& t : nodes_) X.push_back({t.mu, t.sigma});
      // Hyperparameters are fitted once on the initial-state controls and
      // reused for every query through with_outputs.
      const auto u0 = node_controls(0, spec_.initial_state());
      FitOptions o;
      o.prior_mean = 0.0;
      theta_gp_ = fit(X, u0, KernelFamily::squared_exponential, std::nullopt, o);
    }
  }

  const ProblemSpec& spec() const { return spec_; }
  const std::vector<ModelParams>& nodes() const { return nodes_; }
  const std::vector<PolicyBundle>& bundles() const { return bundles_; }

  /// Projected control of node j at (k, x).
  double node_control(std::size_t j, int k, const AugmentedState& x) const {
    const ModelParams& th = nodes_.at(j);
    if (spec_.kind == ProblemKind::portfolio)
      return spec_.control_domain.project(merton_control(th, spec_.r, spec_.gamma));
    const PolicyBundle& b = bundles_.at(j);
    AugmentedState y = x;
    y.k = k;
    y.beliefs = Beliefs{th.mu, th.sigma, k + spec_.k0};
    if (k == 0 || spec_.K == 1) return spec_.control_domain.project(b.optimize_at(y).u);
    return b.control(k, y);
  }

  std::vector<double> node_controls(int k, const AugmentedState& x) const {
    std::vector<double> u(nodes_.size());
    for (std::size_t j = 0; j < nodes_.size(); ++j) u[j] = node_control(j, k, x);
    return u;
  }

  /// Control at the current point estimate theta_bar carried in x.beliefs.
  /// `node_values` may supply precomputed node controls for (k, x).
  double control(int k, const AugmentedState& x, const std::vector<double>* node_values = nullptr) const {
    if (spec_.kind == ProblemKind::portfolio) {
      const double s = std::max(x.beliefs.sigma_bar, 1e-12);
      return spec_.control_domain.project(merton_control({x.beliefs.mu_bar, s}, spec_.r, spec_.gamma));
    }
    std::vector<double> u = node_values ? *node_values : node_controls(k, x);
    if (nodes_.size() == 1) return u[0];
    const GpSurrogate g = theta_gp_->with_outputs(std::move(u), 0.0);
    return spec_.control_domain.project(g.predict_mean({x.beliefs.mu_bar, x.beliefs.sigma_bar}));
  }

 private:
  ProblemSpec spec_;
  std::vector<ModelParams> nodes_;
  std::vector<PolicyBundle> bundles_;
  std::optional<GpSurrogate> theta_gp_;
};

/// Solves the known-parameter problem at every node. Hedging nodes share the
/// hyperparameters fitted at the node closest to the grid centre.
inline MyopicTable myopic_adaptive_table(const ProblemSpec& spec, const std::vector<ModelParams>& grid,
                                         const SolverConfig& cfg) {
  detail::require(!grid.empty(), "myopic_adaptive_table: empty grid");
  std::vector<PolicyBundle> bundles;
  if (spec.kind == ProblemKind::hedging) {
    double cm = 0.0, cs = 0.0;
    for (const auto& t : grid) {
      cm += t.mu / grid.size();
      cs += t.sigma / grid.size();
    }
    std::size_t centre = 0;
    double best = INFINITY;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double d = std::hypot((grid[j].mu - cm) / std::max(std::abs(cm), 1e-3), (grid[j].sigma - cs) / cs);
      if (d < best) {
        best = d;
        centre = j;
      }
    }
    auto node_cfg = [&](const ModelParams& t) {
      SolverConfig c = cfg;
      c.mode = SolverMode::fixed_parameter;
      c.fixed_theta = t;
      c.diagnostics_dir.clear();
      return c;
    };
    PolicyBundle ref = solve(spec, node_cfg(grid[centre]));
    bundles.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      bundles[j] = j == centre ? ref : solve(spec, node_cfg(grid[j]), spec.K > 1 ? &ref : nullptr);
  }
  return MyopicTable(spec, grid, std::move(bundles));
}

enum class StrategyKind { adaptive_robust, static_robust, myopic_adaptive, adaptive_delta, merton_static, constant };

inline const char* to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::adaptive_robust: return "adaptive_robust";
    case StrategyKind::static_robust: return "static_robust";
    case StrategyKind::myopic_adaptive: return "myopic_adaptive";
    case StrategyKind::adaptive_delta: return "adaptive_delta";
    case StrategyKind::merton_static: return "merton_static";
    case StrategyKind::constant: return "constant";
  }
  return "?";
}

inline StrategyKind strategy_kind_from_string(const std::string& s) {
  for (auto k : {StrategyKind::adaptive_robust, StrategyKind::static_robust, StrategyKind::myopic_adaptive,
                 StrategyKind::adaptive_delta, StrategyKind::merton_static, StrategyKind::constant})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown strategy: " + s);
}

/// A feedback rule u(k, x). Policy-backed strategies borrow their bundle or
/// table, which must outlive the strategy.
struct Strategy {
  StrategyKind kind = StrategyKind::constant;
  const PolicyBundle* bundle = nullptr;
  const MyopicTable* table = nullptr;
  ModelParams theta{};
  double value = 0.0;

  static Strategy adaptive_robust(const PolicyBundle& b) { return {StrategyKind::adaptive_robust, &b}; }
  static Strategy static_robust(const PolicyBundle& b) { return {StrategyKind::static_robust, &b}; }
  static Strategy myopic_adaptive(const MyopicTable& t) { return {StrategyKind::myopic_adaptive, nullptr, &t}; }
  static Strategy adaptive_delta() { return {StrategyKind::adaptive_delta}; }
  static Strategy merton_static(const ModelParams& th) { return {StrategyKind::merton_static, nullptr, nullptr, th}; }
  static Strategy constant(double u) { return {StrategyKind::constant, nullptr, nullptr, {}, u}; }

  std::string name() const { return to_string(kind); }

  void check(const ProblemSpec& spec) const {
    if (bundle) {
      detail::require(bundle->spec.kind == spec.kind, "strategy: policy was solved for another problem kind");
      detail::require(bundle->spec.K == spec.K && bundle->spec.dt == spec.dt,
                      "strategy: policy time grid differs from the evaluation problem");
    }
    if (table) detail::require(table->spec().kind == spec.kind, "strategy: table was built for another problem kind");
    if (kind == StrategyKind::adaptive_delta)
      detail::require(spec.kind == ProblemKind::hedging, "adaptive_delta applies to the hedging problem only");
    if ((kind == StrategyKind::adaptive_robust || kind == StrategyKind::static_robust) && !bundle)
      throw ValidationError("strategy: policy bundle missing");
    if (kind == StrategyKind::myopic_adaptive && !table) throw ValidationError("strategy: myopic table missing");
  }
};

/// Per-evaluation cache of the step-0 controls, which depend only on x0.
struct StrategyStart {
  std::optional<double> u0;
  std::vector<double> node_u0;
};

inline StrategyStart prepare_strategy(const Strategy& s, const AugmentedState& x0) {
  StrategyStart st;
  if (s.bundle) {
    st.u0 = s.bundle->spec.control_domain.project(s.bundle->optimize_at(x0).u);
  } else if (s.table && s.table->spec().kind == ProblemKind::hedging) {
    st.node_u0 = s.table->node_controls(0, x0);
  }
  return st;
}

inline double strategy_control(const Strategy& s, const StrategyStart& st, const ProblemSpec& spec, int k,
                               const AugmentedState& x) {
  switch (s.kind) {
    case StrategyKind::adaptive_robust:
    case StrategyKind::static_robust:
      return k == 0 ? *st.u0 : s.bundle->control(k, x);
    case StrategyKind::myopic_adaptive:
      return s.table->control(k, x, k == 0 && !st.node_u0.empty() ? &st.node_u0 : nullptr);
    case StrategyKind::adaptive_delta:
      return bs_delta(k * spec.dt, x.stock(), spec.strike, spec.r, std::max(x.beliefs.sigma_bar, 1e-8),
                      spec.horizon());
    case StrategyKind::merton_static:
      return spec.control_domain.project(merton_control(s.theta, spec.r, spec.gamma));
    case StrategyKind::constant:
      return s.value;
  }
  return 0.0;
}

}  // namespace robustbell
