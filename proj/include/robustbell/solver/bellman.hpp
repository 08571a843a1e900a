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
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>

#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/gp/surrogate.hpp"
#include "robustbell/numerics/minimize.hpp"
#include "robustbell/numerics/quadrature.hpp"

namespace robustbell {

/// Which uncertainty set the Bellman step works with.
///   adaptive_robust  ellipsoid around the site's own beliefs
///   static_robust    ellipsoid frozen at the initial beliefs
///   adaptive         the site's point estimate only
///   fixed_parameter  one known parameter, beliefs not tracked
enum class SolverMode { adaptive_robust, static_robust, adaptive, fixed_parameter };

inline const char* to_string(SolverMode m) {
  switch (m) {
    case SolverMode::adaptive_robust: return "adaptive_robust";
    case SolverMode::static_robust: return "static_robust";
    case SolverMode::adaptive: return "adaptive";
    case SolverMode::fixed_parameter: return "fixed_parameter";
  }
  return "?";
}

inline SolverMode solver_mode_from_string(const std::string& s) {
  if (s == "adaptive_robust") return SolverMode::adaptive_robust;
  if (s == "static_robust") return SolverMode::static_robust;
  if (s == "adaptive") return SolverMode::adaptive;
  if (s == "fixed_parameter") return SolverMode::fixed_parameter;
  throw ValidationError("unknown solver mode: " + s);
}

/// Surrogate input vector for a state. Portfolio values are reduced by the
/// wealth scaling and depend on beliefs only.
struct Features {
  std::array<double, 4> v{};
  std::size_t n = 0;
  std::span<const double> span() const { return {v.data(), n}; }
};

inline Features features(ProblemKind kind, SolverMode mode, const AugmentedState& x) {
  Features f;
  if (kind == ProblemKind::portfolio) {
    f.v = {x.beliefs.mu_bar, x.beliefs.sigma_bar, 0.0, 0.0};
    f.n = 2;
  } else if (mode == SolverMode::fixed_parameter) {
    f.v = {x.stock(), x.hedge_wealth(), 0.0, 0.0};
    f.n = 2;
  } else {
    f.v = {x.stock(), x.hedge_wealth(), x.beliefs.mu_bar, x.beliefs.sigma_bar};
    f.n = 4;
  }
  return f;
}

inline std::size_t feature_dimension(ProblemKind kind, SolverMode mode) {
  return kind == ProblemKind::portfolio || mode == SolverMode::fixed_parameter ? 2 : 4;
}

/// V(t_{k+1}, .) as seen from step k: the analytic terminal condition or a
/// fitted value surrogate. Hedging values are expected losses, so surrogate
/// predictions are floored at zero.
class ValueFunction {
 public:
  ValueFunction(const ProblemSpec& spec, SolverMode mode, const GpSurrogate* surrogate)
      : spec_(&spec), mode_(mode), gp_(surrogate) {}

  bool terminal() const { return gp_ == nullptr; }

  /// Reduced portfolio value at beliefs b.
  double portfolio(const Beliefs& b) const {
    if (!gp_) return 1.0 / (1.0 - spec_->gamma);
    const double f[2] = {b.mu_bar, b.sigma_bar};
    return gp_->predict_mean(std::span<const double>(f, 2));
  }

  double hedging(double S, double W, const Beliefs& b) const {
    if (!gp_) return spec_->loss(call_payoff(S, spec_->strike) - W);
    double v;
    if (mode_ == SolverMode::fixed_parameter) {
      const double f[2] = {S, W};
      v = gp_->predict_mean(std::span<const double>(f, 2));
    } else {
      const double f[4] = {S, W, b.mu_bar, b.sigma_bar};
      v = gp_->predict_mean(std::span<const double>(f, 4));
    }
    return std::max(0.0, v);
  }

 private:
  const ProblemSpec* spec_;
  SolverMode mode_;
  const GpSurrogate* gp_;
};

/// The Bellman sub-problem at one state: shocks, next-step value, and the
/// uncertainty set implied by the solver mode.
struct SiteProblem {
  const ProblemSpec* spec = nullptr;
  SolverMode mode = SolverMode::adaptive_robust;
  const ShockGrid* shocks = nullptr;
  const ValueFunction* next = nullptr;
  AugmentedState state;
  UncertaintyEllipsoid set;  // kappa = 0 means a single parameter
  double inner_tol = 1e-6;
  int phi_scan = 16;
  int n_phi = 16;
  int n_rho = 8;
  double flat_threshold = 0.0;

  bool learning() const { return mode != SolverMode::fixed_parameter; }
};

/// Builds the uncertainty set for a site according to the mode.
inline UncertaintyEllipsoid site_uncertainty(const ProblemSpec& spec, SolverMode mode, const Beliefs& site,
                                             const std::optional<ModelParams>& fixed = std::nullopt) {
  switch (mode) {
    case SolverMode::adaptive_robust:
      return uncertainty_set(site, spec.kappa(), spec.dt);
    case SolverMode::static_robust:
      return uncertainty_set(spec.initial_beliefs(), spec.kappa(), spec.dt);
    case SolverMode::adaptive:
      return uncertainty_set(site, 0.0, spec.dt);
    case SolverMode::fixed_parameter: {
      detail::require(fixed.has_value(), "fixed_parameter mode needs a parameter");
      return uncertainty_set(Beliefs{fixed->mu, fixed->sigma, site.n_eff}, 0.0, spec.dt);
    }
  }
  throw ValidationError("unknown solver mode");
}

// ---------------------------------------------------------------------------
// One-step expectations
// ---------------------------------------------------------------------------

/// sum_i w_i g_i^{1-gamma} V~(t_{k+1}, b'_i) for the reduced portfolio problem.
inline double propagate_portfolio(const SiteProblem& p, double u, const ModelParams& theta) {
  const ProblemSpec& s = *p.spec;
  const ShockGrid& q = *p.shocks;
  const double expo = 1.0 - s.gamma;
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double z = q.knots[i];
    // Far-tail knots can push a leveraged or short position below zero
    // wealth; their weights are negligible, so the growth is floored.
    const double g = std::max(portfolio_growth(u, theta, z, s.r, s.dt), 1e-6);
    const Beliefs b = p.learning() ? update_beliefs(p.state.beliefs, theta, z, s.dt) : p.state.beliefs;
    acc += q.weights[i] * std::pow(g, expo) * p.next->portfolio(b);
  }
  if (!std::isfinite(acc)) throw NumericError("propagated portfolio value is not finite");
  return acc;
}

inline double propagate_hedging(const SiteProblem& p, double u, const ModelParams& theta) {
  const ProblemSpec& s = *p.spec;
  const ShockGrid& q = *p.shocks;
  const double S = p.state.stock(), W = p.state.hedge_wealth();
  const double drift = theta.mu * s.dt, vol = theta.sigma * std::sqrt(s.dt);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double z = q.knots[i];
    const double R = std::exp(drift + vol * z);
    const Beliefs b = p.learning() ? update_beliefs(p.state.beliefs, theta, z, s.dt) : p.state.beliefs;
    acc += q.weights[i] * p.next->hedging(S * R, W + u * S * (R - 1.0), b);
  }
  if (!std::isfinite(acc)) throw NumericError("propagated hedging value is not finite");
  return acc;
}

// ---------------------------------------------------------------------------
// Inner optimisation over the uncertainty set
// ---------------------------------------------------------------------------

struct WorstCase {
  std::optional<double> phi;  // absent for a single-parameter set
  std::optional<double> rho;
  ModelParams theta{};
  double value = 0.0;
};

/// Portfolio adversary: minimises over the boundary angle. A coarse scan that
/// includes phi = pi seeds a bracketed Brent search around the best angle.
inline WorstCase inner_worst_case_portfolio(const SiteProblem& p, double u) {
  const auto& e = p.set;
  if (e.kappa == 0.0) {
    const ModelParams c = e.centre_params();
    return {std::nullopt, std::nullopt, c, propagate_portfolio(p, u, c)};
  }
  const double two_pi = 2.0 * std::numbers::pi;
  auto f = [&](double phi) { return propagate_portfolio(p, u, ellipsoid_point(e, phi, e.kappa)); };
  const int n = std::max(2, p.phi_scan);
  double best_phi = 0.0, best = INFINITY;
  for (int j = 0; j < n; ++j) {
    const double phi = two_pi * (static_cast<double>(j) / n);
    const double v = f(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  const double h = two_pi / n;
  const auto m = minimize_scalar(f, best_phi - h, best_phi + h, p.inner_tol, best_phi);
  if (m.value < best) {
    best = m.value;
    best_phi = m.x;
  }
  best_phi = std::fmod(best_phi, two_pi);
  if (best_phi < 0.0) best_phi += two_pi;
  return {best_phi, e.kappa, ellipsoid_point(e, best_phi, e.kappa), best};
}

/// Hedging adversary: maximises over the centre plus a polar grid with angles
/// 2 pi i / n_phi and radii kappa j / n_rho, j = 1..n_rho. First index wins ties.
inline WorstCase inner_worst_case_hedging(const SiteProblem& p, double u) {
  const auto& e = p.set;
  const ModelParams c = e.centre_params();
  WorstCase best{std::nullopt, std::nullopt, c, propagate_hedging(p, u, c)};
  if (e.kappa == 0.0) return best;
  best.phi = 0.0;
  best.rho = 0.0;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < p.n_phi; ++i) {
    const double phi = two_pi * (static_cast<double>(i) / p.n_phi);
    for (int j = 1; j <= p.n_rho; ++j) {
      const double rho = e.kappa * (static_cast<double>(j) / p.n_rho);
      const ModelParams th = ellipsoid_point(e, phi, rho);
      const double v = propagate_hedging(p, u, th);
      if (v > best.value) best = {phi, rho, th, v};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Outer optimisation over the control
// ---------------------------------------------------------------------------

struct OuterResult {
  double u = 0.0;
  double value = 0.0;
  WorstCase worst;
  bool flat = false;
};

/// Portfolio: maximise the worst-case value over the relaxed control domain.
/// Candidates are the Brent optimum, both endpoints and u = 0 (where the
/// investor carries no parameter risk). Hedging: minimise the worst-case
/// expected loss over the control domain, with the flat (super-hedged) case
/// detected first and mapped to u = 0.
inline OuterResult outer_optimize(const SiteProblem& p, double tol = 1e-6) {
  const ProblemSpec& s = *p.spec;
  const Interval dom = s.relaxed_control_domain;
  if (s.kind == ProblemKind::portfolio) {
    auto neg = [&](double u) { return -inner_worst_case_portfolio(p, u).value; };
    double best_u, best_v;
    if (dom.width() > 0.0) {
      const auto m = minimize_scalar(neg, dom.lo, dom.hi, tol);
      best_u = m.x;
      best_v = -m.value;
    } else {
      best_u = dom.lo;
      best_v = -neg(dom.lo);
    }
    std::array<double, 3> extra{dom.lo, dom.hi, 0.0};
    for (double c : extra) {
      if (!dom.contains(c) || c == best_u) continue;
      const double v = -neg(c);
      if (v > best_v) {
        best_v = v;
        best_u = c;
      }
    }
    WorstCase w = inner_worst_case_portfolio(p, best_u);
    if (best_u == 0.0) {  // no exposure, no adversary to speak of
      w.phi.reset();
      w.rho.reset();
      w.theta = {p.state.beliefs.mu_bar, p.state.beliefs.sigma_bar};
    }
    return {best_u, best_v, w, false};
  }

  auto f = [&](double u) { return inner_worst_case_hedging(p, u).value; };
  if (p.flat_threshold > 0.0) {
    bool flat = true;
    for (double probe : {dom.lo, 0.5 * (dom.lo + dom.hi), dom.hi})
      if (f(probe) >= p.flat_threshold) {
        flat = false;
        break;
      }
    if (flat) {
      const double u0 = dom.project(0.0);
      WorstCase w = inner_worst_case_hedging(p, u0);
      return {u0, w.value, w, true};
    }
  }
  double best_u, best_v;
  if (dom.width() > 0.0) {
    const auto m = minimize_scalar_with_endpoints(f, dom.lo, dom.hi, tol);
    best_u = m.x;
    best_v = m.value;
  } else {
    best_u = dom.lo;
    best_v = f(dom.lo);
  }
  WorstCase w = inner_worst_case_hedging(p, best_u);
  return {best_u, best_v, w, false};
}

}  // namespace robustbell
