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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "robustbell/solver/serialize.hpp"
#include "robustbell/solver/solve.hpp"

using namespace robustbell;

namespace {

SiteProblem site(const ProblemSpec& spec, const ShockGrid& q, const ValueFunction& next, const AugmentedState& x,
                 SolverMode mode = SolverMode::adaptive_robust) {
  SiteProblem p;
  p.spec = &spec;
  p.mode = mode;
  p.shocks = &q;
  p.next = &next;
  p.state = x;
  p.set = site_uncertainty(spec, mode, x.beliefs);
  return p;
}

GpSurrogate constant_surrogate(std::size_t d, double c) {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 5; ++i) {
    X.push_back(std::vector<double>(d, 0.1 * i));
    X.back()[0] += 3.0 * i;
    y.push_back(c);
  }
  KernelSpec k;
  k.tau2 = 1.0;
  k.lengthscales.assign(d, 0.5);
  return GpSurrogate(X, y, k, c, InputTransform::unit_box(X));
}

ProblemSpec small_portfolio(int K = 4) {
  ProblemSpec s = ProblemSpec::portfolio_defaults();
  s.K = K;
  return s;
}

SolverConfig small_config(ProblemKind kind) {
  SolverConfig c;
  c.threads = 1;
  c.gp_restarts = 2;
  c.gp_max_evaluations = 80;
  if (kind == ProblemKind::portfolio) {
    c.n_pilot = 60;
    c.n_qmc = 20;
    c.n_adaptive = 10;
    c.quadrature_size = 12;
  } else {
    c.n_pilot = 40;
    c.n_qmc = 12;
    c.n_edge = 4;
    c.quadrature_size = 8;
    c.n_phi = 8;
    c.n_rho = 2;
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Propagation and the inner problem
// ---------------------------------------------------------------------------

TEST(Propagation, TerminalStepNoExposureIsClosedForm) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const ShockGrid q = gaussian_rule(50).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  for (double mu : {-0.1, 0.05, 0.3}) {
    const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, Beliefs{mu, 0.15, 20}, spec.K - 1));
    const double want = std::pow(1.0 + spec.r * spec.dt, 1.0 - spec.gamma) / (1.0 - spec.gamma);
    EXPECT_NEAR(propagate_portfolio(p, 0.0, {mu, 0.3}), want, 1e-12);
    EXPECT_NEAR(inner_worst_case_portfolio(p, 0.0).value, want, 1e-12);
  }
}

TEST(Propagation, PortfolioMatchesIndependentSum) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto rule = gaussian_rule(30);
  const ShockGrid q = rule.shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, Beliefs{0.1, 0.2, 20}, spec.K - 1));
  for (double u : {-0.2, 0.3, 1.2})
    EXPECT_NEAR(propagate_portfolio(p, u, {0.07, 0.25}),
                oracle::crra_one_step(u, 0.07, 0.25, spec.r, spec.dt, spec.gamma, rule.knots(), rule.weights()), 1e-13);
}

TEST(InnerPortfolio, SingletonSetEvaluatesCentre) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.alpha = 1.0;
  const ShockGrid q = gaussian_rule(20).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, Beliefs{0.12, 0.2, 5}, spec.K - 1));
  const auto w = inner_worst_case_portfolio(p, 0.6);
  EXPECT_FALSE(w.phi.has_value());
  EXPECT_DOUBLE_EQ(w.value, propagate_portfolio(p, 0.6, {0.12, 0.2}));
}

TEST(InnerPortfolio, ConstantNextValueGivesConstant) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.r = 0.0;
  const ShockGrid q = gaussian_rule(20).shocks();
  const GpSurrogate g = constant_surrogate(2, -0.37);
  const ValueFunction next(spec, SolverMode::adaptive_robust, &g);
  const auto p = site(spec, q, next, AugmentedState::portfolio(1.0, Beliefs{0.1, 0.2, 5}, 3));
  // with u = 0 the growth factor is one and only the next value remains
  EXPECT_NEAR(inner_worst_case_portfolio(p, 0.0).value, -0.37, 1e-14);
}

TEST(InnerPortfolio, MatchesAngleGridOracle) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto rule = gaussian_rule(60);
  const ShockGrid q = rule.shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> um(-0.1, 0.4), us(0.05, 0.35), uu(0.05, 1.2);
  for (int t = 0; t < 20; ++t) {
    const Beliefs b{um(rng), us(rng), 20};
    const double u = uu(rng);
    const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, b, spec.K - 1));
    const auto w = inner_worst_case_portfolio(p, u);
    double best = INFINITY;
    for (int j = 0; j < 720; ++j) {
      const auto [mu, sg] = oracle::ellipse_point(b.mu_bar, b.sigma_bar, b.n_eff, spec.dt, spec.kappa(),
                                                  2.0 * std::numbers::pi * j / 720);
      best = std::min(best, oracle::crra_one_step(u, mu, sg, spec.r, spec.dt, spec.gamma, rule.knots(), rule.weights()));
    }
    EXPECT_LE(w.value, best + 1e-14);
    EXPECT_GE(w.value, best - 1e-6 * std::abs(best));
    ASSERT_TRUE(w.phi.has_value());
    EXPECT_LE(w.theta.mu, b.mu_bar + 1e-8);
  }
}

// Volatility side of the worst case at the last step. Writing the CRRA
// expectation to second order in u shows the adversary lowers sigma while
// u is below roughly 1/gamma (the lognormal mean E[R] grows with sigma) and
// raises it beyond. Both regimes are checked against the angle-grid oracle.
TEST(InnerPortfolio, WorstCaseVolatilitySideFollowsOracle) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto rule = gaussian_rule(60);
  const ShockGrid q = rule.shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  for (double u : {0.1, 0.5, 1.0}) {
    const Beliefs b{0.15, 0.2, 20};
    const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, b, spec.K - 1));
    const auto w = inner_worst_case_portfolio(p, u);
    double best = INFINITY, best_sigma = 0.0;
    for (int j = 0; j < 720; ++j) {
      const auto [mu, sg] = oracle::ellipse_point(b.mu_bar, b.sigma_bar, b.n_eff, spec.dt, spec.kappa(),
                                                  2.0 * std::numbers::pi * j / 720);
      const double v = oracle::crra_one_step(u, mu, sg, spec.r, spec.dt, spec.gamma, rule.knots(), rule.weights());
      if (v < best) {
        best = v;
        best_sigma = sg;
      }
    }
    EXPECT_EQ(w.theta.sigma > b.sigma_bar, best_sigma > b.sigma_bar) << "u = " << u;
    if (u >= 0.5) EXPECT_GE(w.theta.sigma, b.sigma_bar - 1e-8);
    if (u <= 0.1) EXPECT_LT(w.theta.sigma, b.sigma_bar);
  }
}

TEST(InnerHedging, ConstantNextValueTakesFirstGridPoint) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const ShockGrid q = gaussian_rule(10).shocks();
  const GpSurrogate g = constant_surrogate(4, 2.5);
  const ValueFunction next(spec, SolverMode::adaptive_robust, &g);
  auto p = site(spec, q, next, AugmentedState::hedging(100.0, 15.0, Beliefs{0.12, 0.4, 155}, 5));
  for (double u : {0.0, 0.4, 1.0}) {
    const auto w = inner_worst_case_hedging(p, u);
    EXPECT_NEAR(w.value, 2.5, 1e-13);
    EXPECT_EQ(*w.phi, 0.0);
    EXPECT_EQ(*w.rho, 0.0);
  }
}

TEST(InnerHedging, CentreOnlyGridIsSingletonEvaluation) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const ShockGrid q = gaussian_rule(10).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  auto p = site(spec, q, term, AugmentedState::hedging(95.0, 10.0, Beliefs{0.1, 0.35, 159}, spec.K - 1));
  p.n_phi = 1;
  p.n_rho = 0;
  EXPECT_DOUBLE_EQ(inner_worst_case_hedging(p, 0.5).value, propagate_hedging(p, 0.5, {0.1, 0.35}));
}

TEST(InnerHedging, RefinedGridNeverLowersTheMaximum) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const ShockGrid q = gaussian_rule(12).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> us(70, 140), uw(0, 30), uu(0, 1);
  for (int t = 0; t < 10; ++t) {
    auto p = site(spec, q, term, AugmentedState::hedging(us(rng), uw(rng), Beliefs{0.12, 0.4, 159}, spec.K - 1));
    const double u = uu(rng);
    const double coarse = inner_worst_case_hedging(p, u).value;
    p.n_phi = 64;
    p.n_rho = 32;
    EXPECT_GE(inner_worst_case_hedging(p, u).value, coarse - 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Outer problem
// ---------------------------------------------------------------------------

TEST(Outer, KappaZeroMatchesControlGrid) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.alpha = 1.0;
  const auto rule = gaussian_rule(40);
  const ShockGrid q = rule.shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  for (double mu : {0.04, 0.08, 0.12}) {
    const Beliefs b{mu, 0.2, 20};
    const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, b, spec.K - 1));
    const auto o = outer_optimize(p);
    double bu = 0.0, bv = -INFINITY;
    for (int i = 0; i <= 2000; ++i) {
      const double u = -0.2 + 1.4 * i / 2000.0;
      const double v = oracle::crra_one_step(u, mu, 0.2, spec.r, spec.dt, spec.gamma, rule.knots(), rule.weights());
      if (v > bv) {
        bv = v;
        bu = u;
      }
    }
    EXPECT_NEAR(o.u, bu, 5e-4) << "mu_bar = " << mu;
  }
}

TEST(Outer, DriftAtRiskFreeRateGivesZero) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.K = 1;
  spec.dt = 1.0;
  spec.k0 = 11;
  spec.relaxed_control_domain = {0.0, 1.0};
  const ShockGrid q = gaussian_rule(40).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  for (double s : {0.1, 0.2, 0.3}) {
    const auto p = site(spec, q, term, AugmentedState::portfolio(1.0, Beliefs{spec.r, s, 11}, 0));
    const auto o = outer_optimize(p);
    EXPECT_EQ(spec.control_domain.project(o.u), 0.0);
    EXPECT_FALSE(o.worst.phi.has_value());
  }
}

TEST(Outer, SuperHedgedRegionIsFlat) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.loss.lambda = 0.0;
  const ShockGrid q = gaussian_rule(20).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  auto p = site(spec, q, term, AugmentedState::hedging(60.0, 80.0, Beliefs{0.12, 0.4, 159}, spec.K - 1));
  p.flat_threshold = 1e-8 * bs_price(0, spec.S0, spec.strike, spec.r, spec.sigma_bar0, spec.horizon());
  const auto o = outer_optimize(p);
  EXPECT_TRUE(o.flat);
  EXPECT_EQ(o.u, 0.0);
}

TEST(Outer, HedgingControlMinimisesOverGrid) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const ShockGrid q = gaussian_rule(16).shocks();
  const ValueFunction term(spec, SolverMode::adaptive_robust, nullptr);
  auto p = site(spec, q, term, AugmentedState::hedging(100.0, 12.0, Beliefs{0.12, 0.4, 159}, spec.K - 1));
  const auto o = outer_optimize(p);
  for (int i = 0; i <= 200; ++i) EXPECT_LE(o.value, inner_worst_case_hedging(p, i / 200.0).value + 1e-9);
}

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

TEST(Design, PortfolioSizesAndMembership) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto pilots = simulate_pilots_portfolio(spec, 250, 5);
  const int k = spec.K - 1;
  const Design d = build_design_portfolio(spec, k, pilots, {}, {}, {100, 50}, 5);
  EXPECT_EQ(d.size(), 150u);
  std::vector<Point2> pts;
  for (const auto& x : pilots.states[k]) pts.push_back({x.beliefs.mu_bar, x.beliefs.sigma_bar});
  const Hull2D hull(pts);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(hull.contains({d.sites[i].beliefs.mu_bar, d.sites[i].beliefs.sigma_bar}));
    EXPECT_EQ(d.sites[i].beliefs.n_eff, k + spec.k0);
  }
}

TEST(Design, PortfolioAdaptiveSitesComeFromInteriorControls) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto pilots = simulate_pilots_portfolio(spec, 250, 5);
  std::vector<AugmentedState> prev;
  std::vector<double> u;
  for (int i = 0; i < 80; ++i) {
    prev.push_back(AugmentedState::portfolio(1.0, Beliefs{0.01 * i, 0.1, 11}, 10));
    u.push_back(i % 2 ? 0.5 : (i % 4 ? 1.0 : 0.0));
  }
  const Design d = build_design_portfolio(spec, 9, pilots, prev, u, {100, 50}, 5);
  const Design again = build_design_portfolio(spec, 9, pilots, prev, u, {100, 50}, 5);
  int adaptive = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.sites[i].beliefs.mu_bar, again.sites[i].beliefs.mu_bar);
    if (d.provenance[i] != Provenance::adaptive) continue;
    ++adaptive;
    const int j = static_cast<int>(std::lround(d.sites[i].beliefs.mu_bar / 0.01));
    EXPECT_EQ(j % 2, 1);
  }
  EXPECT_EQ(adaptive, 40);  // only 40 interior candidates; fill tops up the rest
  EXPECT_EQ(d.size(), 150u);
}

TEST(Design, PortfolioNeedsPreviousSolution) {
  const ProblemSpec spec = ProblemSpec::portfolio_defaults();
  const auto pilots = simulate_pilots_portfolio(spec, 50, 5);
  EXPECT_THROW(build_design_portfolio(spec, 5, pilots, {}, {}, {100, 50}, 5), ValidationError);
}

TEST(Design, HedgingRecipe) {
  const ProblemSpec spec = ProblemSpec::hedging_defaults();
  const auto pilots = simulate_pilots_hedging(spec, 250, 9);
  const Design d = build_design_hedging(spec, 4, pilots, {250, 100, 25}, 9);
  const Design again = build_design_hedging(spec, 4, pilots, {250, 100, 25}, 9);
  ASSERT_EQ(d.size(), 250u);
  int edges = 0, fills = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& x = d.sites[i];
    EXPECT_EQ(x.hedge_wealth(), again.sites[i].hedge_wealth());
    EXPECT_GT(x.stock(), 0.0);
    EXPECT_GT(x.beliefs.sigma_bar, 0.0);
    const double P = bs_price(4 * spec.dt, x.stock(), spec.strike, spec.r, x.beliefs.sigma_bar, spec.horizon());
    EXPECT_GE(x.hedge_wealth(), 0.5 * P);
    EXPECT_LE(x.hedge_wealth(), 1.5 * P);
    if (d.provenance[i] == Provenance::qmc_fill) ++fills;
    if (d.provenance[i] == Provenance::adversarial_edge) {
      ++edges;
      ASSERT_TRUE(d.parent[i].has_value());
      const auto e = uncertainty_set(*d.parent[i], spec.kappa(), spec.dt);
      EXPECT_NEAR(e.constraint({x.beliefs.mu_bar, x.beliefs.sigma_bar}), spec.kappa(), 1e-8);
    }
  }
  EXPECT_EQ(edges, 25);
  EXPECT_EQ(fills, 100);
}

// ---------------------------------------------------------------------------
// Full recursion
// ---------------------------------------------------------------------------

TEST(Solve, SingleStepHasNoSurrogates) {
  ProblemSpec spec = ProblemSpec::portfolio_defaults();
  spec.K = 1;
  const auto b = solve(spec, small_config(ProblemKind::portfolio));
  EXPECT_TRUE(b.steps.empty());
  const auto o = b.optimize_at(spec.initial_state());
  EXPECT_TRUE(std::isfinite(o.value));
}

TEST(Solve, ZeroRadiusMatchesAdaptiveMode) {
  ProblemSpec spec = small_portfolio();
  spec.alpha = 1.0;
  SolverConfig c = small_config(ProblemKind::portfolio);
  const auto a = solve(spec, c);
  c.mode = SolverMode::adaptive;
  spec.alpha = 0.1;
  const auto b = solve(spec, c);
  for (int k = 1; k < spec.K; ++k)
    for (std::size_t i = 0; i < a.step(k).records.size(); ++i)
      EXPECT_NEAR(a.step(k).records[i].u, b.step(k).records[i].u, 1e-6);
}

TEST(Solve, ProjectedControlsAndRecords) {
  const ProblemSpec spec = small_portfolio();
  const auto b = solve(spec, small_config(ProblemKind::portfolio));
  ASSERT_EQ(b.steps.size(), 3u);
  for (int k = 1; k < spec.K; ++k) {
    const auto& s = b.step(k);
    for (std::size_t i = 0; i < s.design.size(); ++i) {
      const double u = b.control(k, s.design.sites[i]);
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
      EXPECT_TRUE(std::isfinite(s.records[i].v));
      EXPECT_GE(s.records[i].u, -0.2);
      EXPECT_LE(s.records[i].u, 1.2);
    }
  }
}

TEST(Solve, HedgingValuesAreNonNegative) {
  ProblemSpec spec = ProblemSpec::hedging_defaults();
  spec.K = 3;
  const auto b = solve(spec, small_config(ProblemKind::hedging));
  for (const auto& s : b.steps)
    for (const auto& r : s.records) EXPECT_GE(r.v, -1e-8);
}

TEST(Solve, DiagnosticsWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "robustbell_diag_test";
  std::filesystem::remove_all(dir);
  SolverConfig c = small_config(ProblemKind::portfolio);
  c.diagnostics_dir = dir.string();
  solve(small_portfolio(3), c);
  std::ifstream in(dir / "design_k1.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "k,site,provenance,mu_bar,sigma_bar,n_eff,v,u_check,phi_check,rho_check,mu_check,sigma_check,flat");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 30);
  std::filesystem::remove_all(dir);
}

TEST(Solve, BundleRoundTripIsExact) {
  const ProblemSpec spec = small_portfolio(3);
  const auto b = solve(spec, small_config(ProblemKind::portfolio));
  const auto r = policy_from_json(nlohmann::json::parse(to_json(b).dump()));
  for (int k = 1; k < spec.K; ++k)
    for (const auto& x : b.step(k).design.sites) {
      EXPECT_EQ(b.control(k, x), r.control(k, x));
      EXPECT_EQ(b.value(k, x), r.value(k, x));
    }
}

TEST(Solve, StaticRobustWithNegativeDriftInSetInvestsNothing) {
  const ProblemSpec spec = small_portfolio();
  ASSERT_LT(uncertainty_set(spec.initial_beliefs(), spec.kappa(), spec.dt).centre_params().mu -
                std::sqrt(spec.kappa() / (spec.k0 * spec.dt)) * spec.sigma_bar0,
            0.0);
  const auto b = static_robust_solve(spec, small_config(ProblemKind::portfolio));
  for (const auto& s : b.steps)
    for (const auto& r : s.records) EXPECT_EQ(spec.control_domain.project(r.u), 0.0);
}

TEST(Solve, ZeroRadiusStaticRobustIsFixedParameterPolicy) {
  ProblemSpec spec = small_portfolio();
  spec.alpha = 1.0;
  SolverConfig c = small_config(ProblemKind::portfolio);
  const auto sr = static_robust_solve(spec, c);
  c.mode = SolverMode::fixed_parameter;
  c.fixed_theta = ModelParams{spec.mu_bar0, spec.sigma_bar0};
  const auto fp = solve(spec, c);
  for (int k = 1; k < spec.K; ++k)
    for (std::size_t i = 0; i < sr.step(k).records.size(); ++i)
      EXPECT_NEAR(sr.step(k).records[i].u, fp.step(k).records[i].u, 1e-6);
}

TEST(MacroReplicate, ShapeAndDeterminism) {
  const ProblemSpec spec = small_portfolio(3);
  const SolverConfig c = small_config(ProblemKind::portfolio);
  const std::vector<AugmentedState> probes{AugmentedState::portfolio(1, Beliefs{0.1, 0.1, 3}, 2),
                                           AugmentedState::portfolio(1, Beliefs{0.3, 0.1, 3}, 2)};
  const auto a = macro_replicate(spec, c, 2, probes);
  const auto b = macro_replicate(spec, c, 2, probes);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].size(), 2u);
  EXPECT_EQ(a, b);
  EXPECT_THROW(macro_replicate(spec, c, 1, probes), ValidationError);
}

TEST(MacroReplicate, LargerDesignIsMoreStable) {
  // Under the default weak prior the robust control is zero almost everywhere
  // at k = 1. A tighter prior centred higher gives interior controls.
  ProblemSpec spec = small_portfolio(3);
  spec.k0 = 50;
  spec.mu_bar0 = 0.14;
  SolverConfig c = small_config(ProblemKind::portfolio);
  c.gp_restarts = 1;
  std::vector<AugmentedState> probes;
  // The k = 1 belief cloud has mu_bar sd ~ 0.08 / (sqrt(dt) * 51) ~ 0.007;
  // probes stay within one sd of its centre, away from the hull edge.
  for (int i = 0; i <= 4; ++i) probes.push_back(AugmentedState::portfolio(1, Beliefs{0.133 + 0.0035 * i, 0.08, 51}, 1));
  auto spread = [&](int n) {
    SolverConfig s = c;
    s.n_qmc = (2 * n + 1) / 3;
    s.n_adaptive = n - s.n_qmc;
    const auto preds = macro_replicate(spec, s, 6, probes);
    double total = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      double m = 0.0, ss = 0.0;
      for (const auto& row : preds) m += row[p] / preds.size();
      for (const auto& row : preds) ss += (row[p] - m) * (row[p] - m);
      total += std::sqrt(ss / (preds.size() - 1));
    }
    return total / probes.size();
  };
  EXPECT_LE(spread(150), spread(20));
}
