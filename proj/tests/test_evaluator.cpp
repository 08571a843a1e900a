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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "robustbell/evaluator/evaluate.hpp"
#include "robustbell/solver/solve.hpp"

using namespace robustbell;

namespace {

SolverConfig hedge_config() {
  SolverConfig c;
  c.threads = 1;
  c.gp_restarts = 1;
  c.gp_max_evaluations = 60;
  c.n_pilot = 40;
  c.n_qmc = 12;
  c.n_edge = 4;
  c.quadrature_size = 8;
  c.n_phi = 8;
  c.n_rho = 2;
  return c;
}

SolverConfig portfolio_config() {
  SolverConfig c;
  c.threads = 1;
  c.gp_restarts = 1;
  c.gp_max_evaluations = 60;
  c.n_pilot = 60;
  c.n_qmc = 20;
  c.n_adaptive = 10;
  c.quadrature_size = 12;
  return c;
}

EvalOptions paths(int n, std::uint64_t seed = 7) {
  EvalOptions o;
  o.paths = n;
  o.seed = seed;
  o.threads = 1;
  return o;
}

}  // namespace

TEST(Merton, ClosedForm) {
  EXPECT_DOUBLE_EQ(merton_control({0.02, 0.3}, 0.02, 4), 0.0);
  EXPECT_NEAR(merton_control({0.10, 0.1}, 0.02, 4), 2.0, 1e-12);
  EXPECT_NEAR(merton_control({0.10, 0.2}, 0.02, 8), 0.5 * merton_control({0.10, 0.2}, 0.02, 4), 1e-15);
  EXPECT_THROW(merton_control({0.1, 0.0}, 0.02, 4), ValidationError);
}

TEST(BlackScholes, ExpiryAndIntegralOracle) {
  EXPECT_DOUBLE_EQ(bs_price(1, 110, 100, 0, 0.4, 1), 10.0);
  EXPECT_DOUBLE_EQ(bs_delta(1, 110, 100, 0, 0.4, 1), 1.0);
  const double p = bs_price(0, 100, 100, 0, 0.4, 1);
  EXPECT_NEAR(p, 15.852, 5e-4);
  EXPECT_NEAR(p, oracle::call_price_integral(100, 100, 0, 0.4, 1), 1e-8);
  EXPECT_NEAR(bs_delta(0, 100, 100, 0, 0.4, 1), 0.5793, 5e-5);
  EXPECT_NEAR(bs_delta(0, 1000, 100, 0, 0.4, 1), 1.0, 1e-6);
  // delta = e^{-r tau} E[S_T / S ; S_T > K], integrated above the exercise boundary
  for (double S : {70.0, 95.0, 130.0}) {
    const double r = 0.01, sg = 0.3, tau = 0.6;
    const double zs = (std::log(100.0 / S) - (r - 0.5 * sg * sg) * tau) / (sg * std::sqrt(tau));
    const int m = 20000;
    const double h = (12.0 - zs) / m;
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double z = zs + i * h;
      const double f = std::exp(-0.5 * sg * sg * tau + sg * std::sqrt(tau) * z - 0.5 * z * z) /
                       std::sqrt(2.0 * std::numbers::pi);
      acc += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    EXPECT_NEAR(bs_delta(0.4, S, 100, r, sg, 1.0), acc * h / 3.0, 1e-10);
  }
}

TEST(Evaluate, RiskFreeStrategyCompoundsDeterministically) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto r = evaluate(Strategy::constant(0.0), spec, TestMeasure::sampled_normal(0.15, 0.02, 0.1),
                          spec.initial_state(), paths(500));
  const double want = std::pow(1.001, 20);
  for (double w : r.terminal) EXPECT_NEAR(w, want, 1e-13);
  ASSERT_TRUE(r.summary.std.has_value());
  EXPECT_NEAR(*r.summary.std, 0.0, 1e-13);
}

TEST(Evaluate, DeltaHedgeAtTrueParameterIsNearlyUnbiased) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.k0 = 100000;
  spec.sigma_bar0 = 0.1;
  spec.mu_bar0 = 0.05;
  spec.W0 = bs_price(0, spec.S0, spec.strike, spec.r, 0.1, spec.horizon());
  const auto r = evaluate(Strategy::adaptive_delta(), spec, TestMeasure::fixed({0.05, 0.1}), spec.initial_state(),
                          paths(5000));
  EXPECT_LE(std::abs(r.summary.mean), 0.5);
}

TEST(Evaluate, SameSeedSameReport) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const auto m = TestMeasure::sampled_uniform_set(spec);
  const auto a = evaluate(Strategy::adaptive_delta(), spec, m, spec.initial_state(), paths(300, 5));
  EvalOptions o = paths(300, 5);
  o.threads = 3;
  const auto b = evaluate(Strategy::adaptive_delta(), spec, m, spec.initial_state(), o);
  EXPECT_EQ(a.terminal, b.terminal);
  EXPECT_EQ(summary_json(a).dump(), summary_json(b).dump());
  const auto c = evaluate(Strategy::adaptive_delta(), spec, m, spec.initial_state(), paths(300, 6));
  EXPECT_NE(a.terminal, c.terminal);
}

TEST(Evaluate, RejectsIncompatibleStrategies) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  EXPECT_THROW(evaluate(Strategy::adaptive_delta(), spec, TestMeasure::fixed({0.1, 0.1}), spec.initial_state(),
                        paths(10)),
               ValidationError);
  EXPECT_THROW(evaluate(Strategy::constant(0.0), spec, TestMeasure::fixed({0.1, 0.1}), spec.initial_state(), paths(0)),
               ValidationError);
}

TEST(Evaluate, SummaryIsRecomputableFromPaths) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const auto r = evaluate(Strategy::adaptive_delta(), spec, TestMeasure::sampled_uniform_set(spec),
                          spec.initial_state(), paths(400));
  double v = 0.0;
  for (std::size_t i = 0; i < r.terminal.size(); ++i) {
    EXPECT_EQ(r.objective[i], spec.loss(r.terminal[i]));
    v += r.objective[i];
  }
  EXPECT_NEAR(r.lower_bound(), v / r.terminal.size(), 1e-12);
  std::stringstream csv;
  write_paths_csv(r, csv);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "path,mu_star,sigma_star,H,loss");
  std::vector<double> back;
  while (std::getline(csv, line)) {
    std::stringstream ls(line);
    std::string f;
    for (int i = 0; i < 4; ++i) std::getline(ls, f, ',');
    back.push_back(std::stod(f));
  }
  const auto s = report_stats(back, spec.loss);
  EXPECT_NEAR(s.mean, r.summary.mean, 1e-12);
  EXPECT_NEAR(*s.std, *r.summary.std, 1e-12);
  EXPECT_NEAR(s.v0, r.summary.v0, 1e-12);
}

TEST(ReportStats, Examples) {
  const auto one = report_stats({3.0}, LossFunction{0.75});
  EXPECT_EQ(one.mean, 3.0);
  EXPECT_FALSE(one.std.has_value());
  EXPECT_EQ(one.q95, 3.0);
  EXPECT_EQ(one.v0, 3.0);
  const auto two = report_stats({-1.0, 1.0}, LossFunction{1.0});
  EXPECT_EQ(two.mean, 0.0);
  EXPECT_EQ(two.v0, 1.0);
  EXPECT_NEAR(*two.std, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(two.q95, 0.9, 1e-15);
  EXPECT_THROW(report_stats(std::vector<double>{}, LossFunction{}), ValidationError);
}

TEST(Histogram, CountsEveryPath) {
  const auto h = histogram({0.0, 0.5, 1.0, 1.0, 2.0}, 4);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 2, 1}));
  EXPECT_EQ(histogram({1.0, 1.0}, 3).counts[0], 2u);
}

TEST(TestMeasure, UniformSetDrawsLieInside) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const auto m = TestMeasure::sampled_uniform_set(spec);
  const auto e = uncertainty_set(spec.initial_beliefs(), spec.kappa(), spec.dt);
  Rng rng = make_rng(1, "draws", 0);
  double mean_mu = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const auto t = m.draw(rng);
    EXPECT_LE(e.constraint(t), spec.kappa() + 1e-9);
    mean_mu += t.mu / 20000;
  }
  EXPECT_NEAR(mean_mu, spec.mu_bar0, 4e-3);
}

TEST(Forward, BeliefUpdatesMatchBatchEstimates) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  for (int p = 0; p < 25; ++p) {
    Rng rng = make_rng(3, "eval_path", p);
    const ModelParams th{0.1 + 0.01 * p, 0.15};
    AugmentedState x = spec.initial_state();
    std::vector<double> inc;
    for (int k = 0; k < spec.K; ++k) {
      const double z = standard_normal(rng);
      inc.push_back(std::log(gross_return(th, z, spec.dt)));
      x = transition_portfolio(x, 0.4, th, z, spec);
    }
    const auto b = oracle::batch_estimates(spec.mu_bar0, spec.sigma_bar0, spec.k0, inc, spec.dt);
    EXPECT_NEAR(x.beliefs.mu_bar, b.mu, 1e-12);
    EXPECT_NEAR(x.beliefs.sigma_bar * x.beliefs.sigma_bar, b.var, 1e-12);
  }
}

TEST(Forward, HigherRiskAversionLowersWealthSpread) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto m = TestMeasure::fixed({0.06, 0.2});
  double prev = INFINITY;
  for (double g : {4.0, 8.0}) {
    spec.gamma = g;
    const auto r = evaluate(Strategy::merton_static({0.06, 0.2}), spec, m, spec.initial_state(), paths(4000));
    EXPECT_LT(*r.summary.std, prev);
    prev = *r.summary.std;
  }
}

TEST(Forward, DeltaControlsAreAdmissible) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const Strategy s = Strategy::adaptive_delta();
  const StrategyStart st = prepare_strategy(s, spec.initial_state());
  for (double S : {1.0, 50.0, 100.0, 180.0, 1e4})
    for (int k = 0; k < spec.K; ++k) {
      const double u = strategy_control(s, st, spec, k, AugmentedState::hedging(S, 10, Beliefs{0.1, 0.3, 150}, k));
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
    }
}

TEST(ThetaGrid, CoversTheInitialSetBox) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const auto g = theta_grid(spec, 8, 8);
  ASSERT_EQ(g.size(), 64u);
  const auto e = uncertainty_set(spec.initial_beliefs(), spec.kappa(), spec.dt);
  EXPECT_NEAR(g.front().mu, ellipsoid_point(e, std::numbers::pi, spec.kappa()).mu, 1e-12);
  EXPECT_NEAR(g.back().mu, ellipsoid_point(e, 0.0, spec.kappa()).mu, 1e-12);
  EXPECT_NEAR(g.back().sigma, ellipsoid_point(e, 0.5 * std::numbers::pi, spec.kappa()).sigma, 1e-12);
  EXPECT_NEAR(theta_grid(spec, 1, 1).front().mu, spec.mu_bar0, 1e-15);
}

TEST(MyopicTable, PortfolioNodesAreMerton) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto grid = theta_grid(spec, 4, 4);
  const auto t = myopic_adaptive_table(spec, grid, portfolio_config());
  for (const auto& th : grid) {
    const auto x = AugmentedState::portfolio(1, Beliefs{th.mu, th.sigma, 5}, 4);
    EXPECT_NEAR(t.control(4, x), spec.control_domain.project(merton_control(th, spec.r, spec.gamma)), 5e-3);
  }
}

TEST(MyopicTable, HedgingNodeQueryReproducesNode) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.K = 3;
  const auto grid = theta_grid(spec, 4, 4);
  const auto t = myopic_adaptive_table(spec, grid, hedge_config());
  for (std::size_t j = 0; j < grid.size(); j += 5) {
    const auto x = AugmentedState::hedging(100, 15, Beliefs{grid[j].mu, grid[j].sigma, spec.k0 + 1}, 1);
    EXPECT_NEAR(t.control(1, x), t.node_control(j, 1, x), 1e-3);
  }
}

TEST(MyopicTable, SingletonGridIsConstantInBeliefs) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.K = 3;
  const auto t = myopic_adaptive_table(spec, theta_grid(spec, 1, 1), hedge_config());
  const double a = t.control(1, AugmentedState::hedging(100, 15, Beliefs{0.0, 0.3, 151}, 1));
  const double b = t.control(1, AugmentedState::hedging(100, 15, Beliefs{0.3, 0.5, 151}, 1));
  EXPECT_EQ(a, b);
}

TEST(StaticRobust, PortfolioInvestsNothing) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.K = 4;
  const auto b = static_robust_solve(spec, portfolio_config());
  const auto r = evaluate(Strategy::static_robust(b), spec, TestMeasure::sampled_normal(0.15, 0.02, 0.1),
                          spec.initial_state(), paths(200));
  for (double w : r.terminal) EXPECT_NEAR(w, std::pow(1.001, 4), 1e-12);
}

// Paired forward paths on an in-the-money family (drift well above the
// initial estimate): compares the static-robust hedge against the adaptive
// robust one step by step.
TEST(StaticRobust, HedgesAtLeastAsMuchAsAdaptiveRobustOnRisingPaths) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.K = 5;
  const SolverConfig c = hedge_config();
  const auto ar = solve(spec, c);
  const auto sr = static_robust_solve(spec, c);
  const Strategy a = Strategy::adaptive_robust(ar), s = Strategy::static_robust(sr);
  const auto x0 = spec.initial_state();
  const StrategyStart sa = prepare_strategy(a, x0), ss = prepare_strategy(s, x0);
  const ModelParams th{0.45, 0.4};
  int ge = 0, total = 0;
  for (int p = 0; p < 1000; ++p) {
    Rng rng = make_rng(17, "paired", p);
    AugmentedState x = x0;
    for (int k = 0; k < spec.K; ++k) {
      const double ua = strategy_control(a, sa, spec, k, x);
      const double us = strategy_control(s, ss, spec, k, x);
      ge += us >= ua;
      ++total;
      x = transition_hedging(x, ua, th, standard_normal(rng), spec);
    }
  }
  EXPECT_GE(ge, 0.8 * total) << ge << " of " << total;
}
