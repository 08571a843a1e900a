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

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/evaluator/strategies.hpp"
#include "robustbell/parallel.hpp"
#include "robustbell/rng.hpp"

namespace robustbell {

enum class MeasureKind { fixed, sampled_normal, sampled_uniform_set };

inline const char* to_string(MeasureKind m) {
  switch (m) {
    case MeasureKind::fixed: return "fixed";
    case MeasureKind::sampled_normal: return "sampled_normal";
    case MeasureKind::sampled_uniform_set: return "sampled_uniform_set";
  }
  return "?";
}

inline MeasureKind measure_kind_from_string(const std::string& s) {
  for (auto k : {MeasureKind::fixed, MeasureKind::sampled_normal, MeasureKind::sampled_uniform_set})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown test measure: " + s);
}

/// Out-of-sample law of the true parameter. Sampled parameters are drawn once
/// per path and held for the whole horizon.
struct TestMeasure {
  MeasureKind kind = MeasureKind::fixed;
  ModelParams theta{};        // fixed
  double mu_mean = 0.0;       // sampled_normal
  double mu_sd = 0.0;
  double sigma = 0.0;
  UncertaintyEllipsoid set{};  // sampled_uniform_set

  static TestMeasure fixed(const ModelParams& t) { return {MeasureKind::fixed, t}; }
  static TestMeasure sampled_normal(double mean, double sd, double sigma) {
    TestMeasure m;
    m.kind = MeasureKind::sampled_normal;
    m.mu_mean = mean;
    m.mu_sd = sd;
    m.sigma = sigma;
    return m;
  }
  /// Uniform on the initial uncertainty set, in (mu, sigma^2) coordinates.
  static TestMeasure sampled_uniform_set(const ProblemSpec& spec) {
    TestMeasure m;
    m.kind = MeasureKind::sampled_uniform_set;
    m.set = uncertainty_set(spec.initial_beliefs(), spec.kappa(), spec.dt);
    return m;
  }

  void validate() const {
    switch (kind) {
      case MeasureKind::fixed:
        detail::require(theta.sigma > 0.0 && std::isfinite(theta.mu), "measure: fixed sigma must be > 0");
        break;
      case MeasureKind::sampled_normal:
        detail::require(mu_sd >= 0.0 && sigma > 0.0, "measure: need mu_sd >= 0 and sigma > 0");
        break;
      case MeasureKind::sampled_uniform_set:
        detail::require(set.center.sigma_bar > 0.0, "measure: set centre needs sigma_bar > 0");
        break;
    }
  }

  ModelParams draw(Rng& rng) const {
    switch (kind) {
      case MeasureKind::fixed: return theta;
      case MeasureKind::sampled_normal:
        return {mu_mean + mu_sd * standard_normal(rng), sigma};
      case MeasureKind::sampled_uniform_set: {
        const Beliefs& c = set.center;
        const double n = c.n_eff;
        for (;;) {
          const double rad = std::sqrt(set.kappa * uniform(rng, 0.0, 1.0));
          const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
          const double mu = c.mu_bar + rad * std::cos(phi) * c.sigma_bar / std::sqrt(n * set.dt);
          const double s2 = c.sigma_bar * c.sigma_bar * (1.0 + rad * std::sin(phi) * std::sqrt(2.0 / n));
          if (s2 > 0.0) return {mu, std::sqrt(s2)};
        }
      }
    }
    return theta;
  }
};

struct Summary {
  std::size_t paths = 0;
  double mean = 0.0;
  std::optional<double> std;  // absent for a single path
  double q95 = 0.0;
  double v0 = 0.0;  // mean objective: expected loss (hedging) or utility (portfolio)
};

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> x, double p) {
  detail::require(!x.empty(), "quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double h = (x.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - lo) * (x[hi] - x[lo]);
}

/// Statistics of terminal quantities together with their objective values.
inline Summary report_stats(const std::vector<double>& terminal, const std::vector<double>& objective) {
  detail::require(!terminal.empty(), "report_stats: no paths");
  detail::require(terminal.size() == objective.size(), "report_stats: length mismatch");
  Summary s;
  s.paths = terminal.size();
  for (double v : terminal) s.mean += v;
  s.mean /= s.paths;
  if (s.paths > 1) {
    double ss = 0.0;
    for (double v : terminal) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.paths - 1));
  }
  s.q95 = quantile(terminal, 0.95);
  for (double v : objective) s.v0 += v;
  s.v0 /= s.paths;
  return s;
}

/// Hedging statistics for errors H under the loss with weight lambda.
inline Summary report_stats(const std::vector<double>& H, const LossFunction& loss) {
  std::vector<double> obj(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) obj[i] = loss(H[i]);
  return report_stats(H, obj);
}

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;
};

inline Histogram histogram(const std::vector<double>& x, int bins = 50) {
  detail::require(!x.empty() && bins >= 1, "histogram: need data and bins >= 1");
  Histogram h;
  h.lo = *std::min_element(x.begin(), x.end());
  h.hi = *std::max_element(x.begin(), x.end());
  h.counts.assign(bins, 0);
  const double w = h.hi > h.lo ? (h.hi - h.lo) / bins : 1.0;
  for (double v : x) h.counts[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((v - h.lo) / w))]++;
  return h;
}

struct EvalReport {
  ProblemKind kind = ProblemKind::portfolio;
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<double> terminal;   // W_T, or H = payoff(S_T) - W_T
  std::vector<double> objective;  // utility, or loss of H
  std::vector<ModelParams> theta;
  Summary summary;
  Histogram hist;

  /// Lower-bound estimate of the value at x0: the plain average objective.
  double lower_bound() const { return summary.v0; }
};

struct EvalOptions {
  int paths = 10000;
  std::uint64_t seed = 7;
  int threads = 0;
  int bins = 50;
};

/// Forward Monte Carlo of a strategy from x0 under the test measure.
inline EvalReport evaluate(const Strategy& strategy, const ProblemSpec& spec, const TestMeasure& measure,
                           const AugmentedState& x0, const EvalOptions& opt) {
  spec.validate();
  measure.validate();
  strategy.check(spec);
  detail::require(opt.paths >= 1, "evaluate: need at least one path");
  detail::require(x0.k == 0, "evaluate: x0 must sit at step 0");
  const StrategyStart start = prepare_strategy(strategy, x0);

  EvalReport rep;
  rep.kind = spec.kind;
  rep.strategy = strategy.name();
  rep.seed = opt.seed;
  rep.terminal.resize(opt.paths);
  rep.objective.resize(opt.paths);
  rep.theta.resize(opt.paths);
  parallel_for(static_cast<std::size_t>(opt.paths), resolve_threads(opt.threads), [&](std::size_t n) {
    Rng rng = make_rng(opt.seed, "eval_path", n);
    const ModelParams th = measure.draw(rng);
    AugmentedState x = x0;
    for (int k = 0; k < spec.K; ++k) {
      const double u = strategy_control(strategy, start, spec, k, x);
      if (!std::isfinite(u)) throw NumericError("evaluate: non-finite control at step " + std::to_string(k));
      const double z = standard_normal(rng);
      x = spec.kind == ProblemKind::portfolio ? transition_portfolio(x, u, th, z, spec)
                                              : transition_hedging(x, u, th, z, spec);
    }
    rep.theta[n] = th;
    if (spec.kind == ProblemKind::portfolio) {
      rep.terminal[n] = x.wealth();
      rep.objective[n] = crra_utility(x.wealth(), spec.gamma);
    } else {
      rep.terminal[n] = call_payoff(x.stock(), spec.strike) - x.hedge_wealth();
      rep.objective[n] = spec.loss(rep.terminal[n]);
    }
  });
  rep.summary = report_stats(rep.terminal, rep.objective);
  rep.hist = histogram(rep.terminal, opt.bins);
  return rep;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline nlohmann::json summary_json(const EvalReport& r) {
  nlohmann::json j;
  j["strategy"] = r.strategy;
  j["kind"] = to_string(r.kind);
  j["seed"] = r.seed;
  j["paths"] = r.summary.paths;
  j["mean"] = r.summary.mean;
  j["std"] = r.summary.std ? nlohmann::json(*r.summary.std) : nlohmann::json(nullptr);
  j["q95"] = r.summary.q95;
  j["V0"] = r.summary.v0;
  return j;
}

inline void write_paths_csv(const EvalReport& r, std::ostream& out) {
  out.precision(17);
  out << "path,mu_star,sigma_star," << (r.kind == ProblemKind::portfolio ? "W_T,utility" : "H,loss") << '\n';
  for (std::size_t n = 0; n < r.terminal.size(); ++n)
    out << n << ',' << r.theta[n].mu << ',' << r.theta[n].sigma << ',' << r.terminal[n] << ',' << r.objective[n]
        << '\n';
}

inline void write_histogram_csv(const EvalReport& r, std::ostream& out) {
  out.precision(17);
  out << "bin,lo,hi,count\n";
  const auto& h = r.hist;
  const std::size_t b = h.counts.size();
  const double w = h.hi > h.lo ? (h.hi - h.lo) / b : 1.0;
  for (std::size_t i = 0; i < b; ++i)
    out << i << ',' << h.lo + i * w << ',' << h.lo + (i + 1) * w << ',' << h.counts[i] << '\n';
}

}  // namespace robustbell
