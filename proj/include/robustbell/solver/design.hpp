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
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "robustbell/black_scholes.hpp"
#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/numerics/hull.hpp"
#include "robustbell/numerics/sobol.hpp"
#include "robustbell/rng.hpp"

namespace robustbell {

enum class Provenance { pilot, qmc_fill, adaptive, adversarial_edge };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::pilot: return "pilot";
    case Provenance::qmc_fill: return "qmc_fill";
    case Provenance::adaptive: return "adaptive";
    case Provenance::adversarial_edge: return "adversarial_edge";
  }
  return "?";
}

/// Training sites for one time step.
struct Design {
  int k = 0;
  std::vector<AugmentedState> sites;
  std::vector<Provenance> provenance;
  std::vector<std::optional<Beliefs>> parent;  // set for adversarial-edge sites

  std::size_t size() const { return sites.size(); }

  void add(const AugmentedState& x, Provenance p, std::optional<Beliefs> par = std::nullopt) {
    sites.push_back(x);
    provenance.push_back(p);
    parent.push_back(par);
  }
};

/// Forward pilot states, indexed [k][path] for k = 0..K-1.
struct PilotPaths {
  std::vector<std::vector<AugmentedState>> states;
};

/// Portfolio pilots: belief paths from the initial beliefs under the pilot
/// measure (the initial point estimate). Wealth plays no role.
inline PilotPaths simulate_pilots_portfolio(const ProblemSpec& spec, int n, std::uint64_t seed) {
  detail::require(n >= 3, "pilot paths: need at least 3 paths");
  const ModelParams theta{spec.mu_bar0, spec.sigma_bar0};
  PilotPaths out;
  out.states.assign(spec.K, std::vector<AugmentedState>(n));
  for (int p = 0; p < n; ++p) {
    Rng rng = make_rng(seed, "pilot_portfolio", p);
    Beliefs b = spec.initial_beliefs();
    for (int k = 0; k < spec.K; ++k) {
      out.states[k][p] = AugmentedState::portfolio(spec.y0, b, k);
      b = update_beliefs(b, theta, standard_normal(rng), spec.dt);
    }
  }
  return out;
}

/// Hedging pilots from randomized initial conditions:
/// mu_bar ~ U[0.5, 1.5] mu_bar0, sigma_bar ~ U[0.6, 1.3] sigma_bar0,
/// S ~ U[0.5, 2] strike. With `fixed` the beliefs stay at that parameter and
/// paths are simulated under it.
inline PilotPaths simulate_pilots_hedging(const ProblemSpec& spec, int n, std::uint64_t seed,
                                          const std::optional<ModelParams>& fixed = std::nullopt) {
  detail::require(n >= 4, "pilot paths: need at least 4 paths");
  const ModelParams theta = fixed.value_or(ModelParams{spec.mu_bar0, spec.sigma_bar0});
  PilotPaths out;
  out.states.assign(spec.K, std::vector<AugmentedState>(n));
  for (int p = 0; p < n; ++p) {
    Rng rng = make_rng(seed, fixed ? "pilot_hedging_fixed" : "pilot_hedging", p);
    Beliefs b{theta.mu, theta.sigma, spec.k0};
    if (!fixed) {
      b.mu_bar = uniform(rng, 0.5 * spec.mu_bar0, 1.5 * spec.mu_bar0);
      b.sigma_bar = uniform(rng, 0.6 * spec.sigma_bar0, 1.3 * spec.sigma_bar0);
    }
    double S = uniform(rng, 0.5 * spec.strike, 2.0 * spec.strike);
    for (int k = 0; k < spec.K; ++k) {
      out.states[k][p] = AugmentedState::hedging(S, 0.0, b, k);
      const double z = standard_normal(rng);
      S *= gross_return(theta, z, spec.dt);
      if (!fixed) b = update_beliefs(b, theta, z, spec.dt);
    }
  }
  return out;
}

struct PortfolioDesignSizes {
  int n_qmc = 100;
  int n_adaptive = 50;
};

/// Three-step portfolio design in (mu_bar, sigma_bar): hull of the step-k
/// pilot beliefs, Sobol fill of that hull, and sites copied from step k+1
/// where the control was interior. Missing adaptive sites (none available, or
/// the last step) are topped up with further fill points.
inline Design build_design_portfolio(const ProblemSpec& spec, int k, const PilotPaths& pilots,
                                     std::span<const AugmentedState> prev_sites, std::span<const double> prev_controls,
                                     PortfolioDesignSizes sizes, std::uint64_t seed) {
  detail::require(k >= 1 && k < spec.K, "build_design_portfolio: step out of range");
  detail::require(sizes.n_qmc >= 0 && sizes.n_adaptive >= 0, "build_design_portfolio: sizes must be >= 0");
  detail::require(sizes.n_qmc + sizes.n_adaptive >= 2, "build_design_portfolio: need at least 2 sites");
  detail::require(prev_sites.size() == prev_controls.size(), "build_design_portfolio: previous sites and controls differ");
  if (sizes.n_adaptive > 0 && k < spec.K - 1)
    detail::require(!prev_sites.empty(), "build_design_portfolio: previous step solution required");
  const int n_eff = k + spec.k0;

  std::vector<Point2> pts;
  for (const auto& x : pilots.states.at(k)) pts.push_back({x.beliefs.mu_bar, x.beliefs.sigma_bar});
  const Hull2D hull(pts);

  Rng rng = make_rng(seed, "design_portfolio", k);
  const int skip = 1 + static_cast<int>(rng() % 4096);

  std::vector<std::size_t> interior;
  if (k < spec.K - 1)
    for (std::size_t i = 0; i < prev_sites.size(); ++i)
      if (prev_controls[i] > spec.control_domain.lo && prev_controls[i] < spec.control_domain.hi) interior.push_back(i);
  std::shuffle(interior.begin(), interior.end(), rng);
  const int n_copy = std::min<int>(sizes.n_adaptive, static_cast<int>(interior.size()));

  Design d;
  d.k = k;
  const auto fillpts = fill(hull, sizes.n_qmc + sizes.n_adaptive - n_copy, skip);
  for (const auto& p : fillpts)
    d.add(AugmentedState::portfolio(spec.y0, Beliefs{p[0], p[1], n_eff}, k), Provenance::qmc_fill);
  for (int i = 0; i < n_copy; ++i) {
    Beliefs b = prev_sites[interior[i]].beliefs;
    b.n_eff = n_eff;
    d.add(AugmentedState::portfolio(spec.y0, b, k), Provenance::adaptive);
  }
  return d;
}

struct HedgingDesignSizes {
  int n_pilot = 250;  // total design size
  int n_qmc = 100;    // pilot sites replaced by hull fill
  int n_edge = 25;    // pilot sites replaced by adversarial-edge sites
};

inline void sample_hedge_wealth(const ProblemSpec& spec, Design& d, Rng& rng,
                                const std::optional<ModelParams>& fixed = std::nullopt) {
  const double T = spec.horizon();
  for (auto& x : d.sites) {
    const double sigma = fixed ? fixed->sigma : x.beliefs.sigma_bar;
    const double P = bs_price(x.k * spec.dt, x.stock(), spec.strike, spec.r, sigma, T);
    x.market[1] = uniform(rng, 0.5 * P, 1.5 * P);
  }
}

/// Hedging design in (S, W, mu_bar, sigma_bar): pilot sites, adversarial-edge
/// sites on the boundary of a random pilot's uncertainty set, and hull fill in
/// (S, mu_bar, sigma_bar) replacing randomly chosen pilots. Wealth is drawn
/// uniformly in [0.5, 1.5] times the site's Black-Scholes price.
inline Design build_design_hedging(const ProblemSpec& spec, int k, const PilotPaths& pilots, HedgingDesignSizes sizes,
                                   std::uint64_t seed) {
  detail::require(k >= 1 && k < spec.K, "build_design_hedging: step out of range");
  const auto& pool = pilots.states.at(k);
  const int n = static_cast<int>(pool.size());
  detail::require(sizes.n_pilot == n, "build_design_hedging: n_pilot must equal the pilot path count");
  detail::require(sizes.n_qmc >= 0 && sizes.n_edge >= 0 && sizes.n_qmc + sizes.n_edge < n,
                  "build_design_hedging: n_qmc + n_edge must be below n_pilot");
  const double kappa = spec.kappa();
  const int n_edge = kappa > 0.0 ? sizes.n_edge : 0;
  const int n_eff = k + spec.k0;
  Rng rng = make_rng(seed, "design_hedging", k);

  std::vector<AugmentedState> edges;
  std::vector<Beliefs> parents;
  for (int e = 0; e < n_edge; ++e) {
    const auto& par = pool[static_cast<std::size_t>(rng() % n)];
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const ModelParams th = ellipsoid_point(uncertainty_set(par.beliefs, kappa, spec.dt), phi, kappa);
    edges.push_back(AugmentedState::hedging(par.stock(), 0.0, Beliefs{th.mu, th.sigma, n_eff}, k));
    parents.push_back(par.beliefs);
  }
  std::vector<Point3> pts;
  for (const auto& x : pool) pts.push_back({x.stock(), x.beliefs.mu_bar, x.beliefs.sigma_bar});
  for (const auto& x : edges) pts.push_back({x.stock(), x.beliefs.mu_bar, x.beliefs.sigma_bar});
  const Hull3D hull(pts);
  const int skip = 1 + static_cast<int>(rng() % 4096);
  const auto fillpts = fill(hull, sizes.n_qmc, skip);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_keep = n - sizes.n_qmc - n_edge;
  std::sort(order.begin(), order.begin() + n_keep);

  Design d;
  d.k = k;
  for (int i = 0; i < n_keep; ++i) {
    AugmentedState x = pool[order[i]];
    x.beliefs.n_eff = n_eff;
    d.add(x, Provenance::pilot);
  }
  for (int e = 0; e < n_edge; ++e) d.add(edges[e], Provenance::adversarial_edge, parents[e]);
  for (const auto& p : fillpts)
    d.add(AugmentedState::hedging(p[0], 0.0, Beliefs{p[1], p[2], n_eff}, k), Provenance::qmc_fill);
  sample_hedge_wealth(spec, d, rng);
  return d;
}

/// Design for a known parameter: (S, W) sites from the pilots, part of them
/// replaced by a Sobol fill of the pilot stock range.
inline Design build_design_hedging_fixed(const ProblemSpec& spec, int k, const PilotPaths& pilots, int n_qmc,
                                         const ModelParams& theta, std::uint64_t seed) {
  const auto& pool = pilots.states.at(k);
  const int n = static_cast<int>(pool.size());
  detail::require(n_qmc >= 0 && n_qmc < n, "build_design_hedging_fixed: n_qmc must be below the pilot count");
  Rng rng = make_rng(seed, "design_hedging_fixed", k);
  double lo = pool.front().stock(), hi = lo;
  for (const auto& x : pool) {
    lo = std::min(lo, x.stock());
    hi = std::max(hi, x.stock());
  }
  const Beliefs b{theta.mu, theta.sigma, k + spec.k0};
  Design d;
  d.k = k;
  for (int i = 0; i < n - n_qmc; ++i) d.add(AugmentedState::hedging(pool[i].stock(), 0.0, b, k), Provenance::pilot);
  const auto q = sobol(n_qmc, 1, 1 + static_cast<int>(rng() % 4096));
  for (const auto& p : q) d.add(AugmentedState::hedging(lo + p[0] * (hi - lo), 0.0, b, k), Provenance::qmc_fill);
  sample_hedge_wealth(spec, d, rng, theta);
  return d;
}

}  // namespace robustbell
