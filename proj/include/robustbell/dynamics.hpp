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
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "robustbell/errors.hpp"

namespace robustbell {

/// Model parameters (mu, sigma): drift per unit time, volatility per sqrt(unit time).
struct ModelParams {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Point estimates of (mu, sigma) plus the effective number of observations
/// behind them.
struct Beliefs {
  double mu_bar = 0.0;
  double sigma_bar = 0.0;
  int n_eff = 1;
};

inline void validate(const Beliefs& b) {
  detail::require(std::isfinite(b.mu_bar) && std::isfinite(b.sigma_bar), "beliefs must be finite");
  detail::require(b.sigma_bar >= 0.0, "beliefs.sigma_bar must be >= 0");
  detail::require(b.n_eff >= 1, "beliefs.n_eff must be >= 1");
}

enum class ProblemKind { portfolio, hedging };

inline const char* to_string(ProblemKind k) {
  return k == ProblemKind::portfolio ? "portfolio" : "hedging";
}

/// Market coordinates plus beliefs at step k. Portfolio: market = [y, unused];
/// hedging: market = [S, W].
struct AugmentedState {
  std::array<double, 2> market{1.0, 0.0};
  Beliefs beliefs;
  int k = 0;

  double wealth() const { return market[0]; }
  double stock() const { return market[0]; }
  double hedge_wealth() const { return market[1]; }

  static AugmentedState portfolio(double y, Beliefs b, int k = 0) {
    return AugmentedState{{y, 0.0}, b, k};
  }
  static AugmentedState hedging(double S, double W, Beliefs b, int k = 0) {
    return AugmentedState{{S, W}, b, k};
  }
};

/// Piecewise-linear loss l(h) = h+ + lambda * h-.
struct LossFunction {
  double lambda = 0.75;

  double operator()(double h) const { return h >= 0.0 ? h : -lambda * h; }
};

inline double loss(const LossFunction& l, double h) { return l(h); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double project(double x) const { return std::clamp(x, lo, hi); }
  double width() const { return hi - lo; }
};

// ---------------------------------------------------------------------------
// Closed-form helpers
// ---------------------------------------------------------------------------

/// (p)-quantile of the chi-square distribution with two degrees of freedom.
inline double chi2_quantile_2dof(double p) {
  detail::require(p > 0.0 && p < 1.0, "chi2 quantile: p must lie in (0, 1)");
  return -2.0 * std::log(1.0 - p);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double crra_utility(double y, double gamma) {
  detail::require(y > 0.0, "crra_utility: wealth must be positive");
  detail::require(gamma > 0.0 && gamma != 1.0, "crra_utility: gamma must be positive and != 1");
  return std::pow(y, 1.0 - gamma) / (1.0 - gamma);
}

inline double call_payoff(double S, double strike) { return std::max(S - strike, 0.0); }

// ---------------------------------------------------------------------------
// Problem description
// ---------------------------------------------------------------------------

struct ProblemSpec {
  ProblemKind kind = ProblemKind::portfolio;
  double r = 0.02;
  double dt = 0.05;
  int K = 20;
  double gamma = 4.0;
  double strike = 100.0;
  LossFunction loss{};
  double alpha = 0.1;
  std::optional<double> kappa_override;
  int k0 = 1;  // n_eff at k = 0
  Interval control_domain{0.0, 1.0};
  Interval relaxed_control_domain{-0.2, 1.2};

  // Initial condition x0.
  double y0 = 1.0;
  double S0 = 100.0;
  double W0 = 20.0;
  double mu_bar0 = 0.1;
  double sigma_bar0 = 0.08;

  double horizon() const { return K * dt; }

  /// Radius of the confidence ellipsoid: the (1 - alpha)-quantile of chi2(2),
  /// zero when alpha = 1, unless overridden.
  double kappa() const {
    if (kappa_override) return *kappa_override;
    if (alpha >= 1.0) return 0.0;
    return chi2_quantile_2dof(1.0 - alpha);
  }

  Beliefs initial_beliefs() const { return Beliefs{mu_bar0, sigma_bar0, k0}; }

  AugmentedState initial_state() const {
    return kind == ProblemKind::portfolio ? AugmentedState::portfolio(y0, initial_beliefs(), 0)
                                          : AugmentedState::hedging(S0, W0, initial_beliefs(), 0);
  }

  void validate() const {
    using detail::require;
    require(std::isfinite(r), "problem.r must be finite");
    require(dt > 0.0 && std::isfinite(dt), "problem.dt must be > 0");
    require(K >= 1, "problem.K must be >= 1");
    require(alpha > 0.0 && alpha <= 1.0, "problem.alpha must lie in (0, 1]");
    if (kappa_override) require(*kappa_override >= 0.0, "problem.kappa must be >= 0");
    require(k0 >= 1, "problem.k0 must be >= 1");
    require(control_domain.lo <= control_domain.hi, "problem.u_min must be <= problem.u_max");
    require(relaxed_control_domain.lo <= control_domain.lo &&
                relaxed_control_domain.hi >= control_domain.hi,
            "problem.relaxed domain must contain the control domain");
    require(sigma_bar0 > 0.0, "problem.sigma_bar0 must be > 0");
    require(std::isfinite(mu_bar0), "problem.mu_bar0 must be finite");
    if (kind == ProblemKind::portfolio) {
      require(gamma > 0.0 && gamma != 1.0, "problem.gamma must be > 0 and != 1");
      require(y0 > 0.0, "problem.y0 must be > 0");
    } else {
      require(strike > 0.0, "problem.strike must be > 0");
      require(loss.lambda >= 0.0, "problem.lambda must be >= 0");
      require(S0 > 0.0, "problem.S0 must be > 0");
      require(std::isfinite(W0), "problem.W0 must be finite");
    }
  }

  /// r = 0.02, T = 1, dt = 0.05, alpha = 0.1, gamma = 4, initial beliefs (0.1, 0.08).
  static ProblemSpec portfolio_defaults() { return ProblemSpec{}; }

  /// r = 0, T = 1, dt = 0.1, k0 = 150, alpha = 0.1, beliefs (0.12, 0.4), S0 = K = 100.
  static ProblemSpec hedging_defaults() {
    ProblemSpec p;
    p.kind = ProblemKind::hedging;
    p.r = 0.0;
    p.dt = 0.1;
    p.K = 10;
    p.alpha = 0.1;
    p.k0 = 150;
    p.strike = 100.0;
    p.loss = LossFunction{0.75};
    p.control_domain = {0.0, 1.0};
    p.relaxed_control_domain = {0.0, 1.0};
    p.S0 = 100.0;
    p.W0 = 20.0;
    p.mu_bar0 = 0.12;
    p.sigma_bar0 = 0.4;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Learning and transitions
// ---------------------------------------------------------------------------

/// One step of the recursive MLE for (mu, sigma) given the shock z driving
/// the observed log-return mu*dt + sigma*sqrt(dt)*z.
inline Beliefs update_beliefs(const Beliefs& b, const ModelParams& theta, double z, double dt) {
  const double n = b.n_eff;
  const double w = n / (n + 1.0);
  const double sqdt = std::sqrt(dt);
  const double obs = theta.mu + theta.sigma * z / sqdt;
  const double dev = (b.mu_bar - theta.mu) * sqdt - theta.sigma * z;
  Beliefs out;
  out.mu_bar = w * b.mu_bar + obs / (n + 1.0);
  out.sigma_bar = std::sqrt(w * b.sigma_bar * b.sigma_bar + w / (n + 1.0) * dev * dev);
  out.n_eff = b.n_eff + 1;
  return out;
}

/// Gross return e^{mu dt + sigma sqrt(dt) z} of the risky asset over one step.
inline double gross_return(const ModelParams& theta, double z, double dt) {
  return std::exp(theta.mu * dt + theta.sigma * std::sqrt(dt) * z);
}

/// Wealth multiplier 1 + r dt + u (R - r dt - 1) for fraction u in the risky asset.
inline double portfolio_growth(double u, const ModelParams& theta, double z, double r, double dt) {
  return 1.0 + r * dt + u * (gross_return(theta, z, dt) - r * dt - 1.0);
}

inline AugmentedState transition_portfolio(const AugmentedState& x, double u,
                                           const ModelParams& theta, double z,
                                           const ProblemSpec& spec) {
  using detail::require_finite;
  require_finite(u, "control");
  require_finite(theta.mu, "mu");
  require_finite(theta.sigma, "sigma");
  require_finite(z, "shock");
  detail::require(x.wealth() > 0.0, "transition_portfolio: wealth must be positive");
  AugmentedState next = x;
  next.market[0] = x.wealth() * portfolio_growth(u, theta, z, spec.r, spec.dt);
  next.beliefs = update_beliefs(x.beliefs, theta, z, spec.dt);
  next.k = x.k + 1;
  return next;
}

inline AugmentedState transition_hedging(const AugmentedState& x, double u,
                                         const ModelParams& theta, double z,
                                         const ProblemSpec& spec) {
  using detail::require_finite;
  require_finite(u, "control");
  require_finite(theta.mu, "mu");
  require_finite(theta.sigma, "sigma");
  require_finite(z, "shock");
  require_finite(x.hedge_wealth(), "wealth");
  detail::require(x.stock() > 0.0, "transition_hedging: stock price must be positive");
  const double R = gross_return(theta, z, spec.dt);
  AugmentedState next = x;
  next.market[0] = x.stock() * R;
  next.market[1] = x.hedge_wealth() + u * x.stock() * (R - 1.0);
  next.beliefs = update_beliefs(x.beliefs, theta, z, spec.dt);
  next.k = x.k + 1;
  return next;
}

// ---------------------------------------------------------------------------
// Uncertainty sets
// ---------------------------------------------------------------------------

/// {(mu, sigma) : (n dt / sb^2)(mu - mb)^2 + (n / (2 sb^4))(sigma^2 - sb^2)^2 <= kappa}
struct UncertaintyEllipsoid {
  Beliefs center;
  double kappa = 0.0;
  double dt = 1.0;

  double constraint(const ModelParams& theta) const {
    const double s2 = center.sigma_bar * center.sigma_bar;
    const double n = center.n_eff;
    const double dm = theta.mu - center.mu_bar;
    const double ds = theta.sigma * theta.sigma - s2;
    return n * dt / s2 * dm * dm + n / (2.0 * s2 * s2) * ds * ds;
  }

  bool contains(const ModelParams& theta, double tol = 1e-12) const {
    if (kappa == 0.0 || center.sigma_bar == 0.0)
      return theta.mu == center.mu_bar && theta.sigma == center.sigma_bar;
    return constraint(theta) <= kappa + tol;
  }

  ModelParams centre_params() const { return {center.mu_bar, center.sigma_bar}; }
};

inline UncertaintyEllipsoid uncertainty_set(const Beliefs& b, double kappa, double dt) {
  detail::require(kappa >= 0.0 && std::isfinite(kappa), "uncertainty_set: kappa must be >= 0");
  detail::require(dt > 0.0, "uncertainty_set: dt must be > 0");
  validate(b);
  if (kappa > 0.0 && b.sigma_bar == 0.0)
    throw ValidationError("uncertainty_set: sigma_bar = 0 with kappa > 0 has a degenerate metric");
  return UncertaintyEllipsoid{b, kappa, dt};
}

/// Polar parameterisation of the ellipsoid: angle phi, "radius" rho in [0, kappa].
/// rho = kappa lands on the boundary unless the sigma^2 clamp at 0 is active.
inline ModelParams ellipsoid_point(const UncertaintyEllipsoid& e, double phi, double rho) {
  if (!(rho >= 0.0 && rho <= e.kappa * (1.0 + 1e-15)))
    throw ValidationError("ellipsoid_point: rho must lie in [0, kappa]");
  const Beliefs& c = e.center;
  const double n = c.n_eff;
  const double mu = c.mu_bar + std::sqrt(rho / (n * e.dt)) * c.sigma_bar * std::cos(phi);
  const double s2 = c.sigma_bar * c.sigma_bar * (1.0 + std::sqrt(2.0 * rho / n) * std::sin(phi));
  return {mu, std::sqrt(std::max(0.0, s2))};
}

/// Known-volatility drift interval centred on mu_bar with q = Phi^{-1}(1 - alpha/2).
inline Interval drift_interval(const Beliefs& b, double sigma_known, double alpha, double dt) {
  detail::require(alpha > 0.0 && alpha < 1.0, "drift_interval: alpha must lie in (0, 1)");
  detail::require(dt > 0.0, "drift_interval: dt must be > 0");
  const double q = normal_quantile(1.0 - alpha / 2.0);
  const double half = sigma_known * q / std::sqrt(b.n_eff * dt);
  return {b.mu_bar - half, b.mu_bar + half};
}

}  // namespace robustbell
