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

#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"

namespace robustbell {

namespace detail {
inline void check_bs_inputs(double t, double S, double strike, double sigma, double T) {
  require(S > 0.0 && std::isfinite(S), "black_scholes: S must be > 0");
  require(strike > 0.0, "black_scholes: strike must be > 0");
  require(sigma > 0.0 && std::isfinite(sigma), "black_scholes: sigma must be > 0");
  require(t <= T + 1e-12, "black_scholes: t must not exceed T");
}
}  // namespace detail

/// Black-Scholes call price; the payoff at (or numerically at) expiry.
inline double bs_price(double t, double S, double strike, double r, double sigma, double T) {
  detail::check_bs_inputs(t, S, strike, sigma, T);
  const double tau = T - t;
  if (tau <= 1e-14) return call_payoff(S, strike);
  const double sq = sigma * std::sqrt(tau);
  const double d1 = (std::log(S / strike) + (r + 0.5 * sigma * sigma) * tau) / sq;
  const double d2 = d1 - sq;
  return S * normal_cdf(d1) - strike * std::exp(-r * tau) * normal_cdf(d2);
}

/// Black-Scholes call delta, in [0, 1]; the indicator of S > strike at expiry.
inline double bs_delta(double t, double S, double strike, double r, double sigma, double T) {
  detail::check_bs_inputs(t, S, strike, sigma, T);
  const double tau = T - t;
  if (tau <= 1e-14) return S > strike ? 1.0 : 0.0;
  const double sq = sigma * std::sqrt(tau);
  const double d1 = (std::log(S / strike) + (r + 0.5 * sigma * sigma) * tau) / sq;
  return normal_cdf(d1);
}

}  // namespace robustbell
