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
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "robustbell/errors.hpp"
#include "robustbell/rng.hpp"

namespace robustbell {

/// Discrete stand-in for the standard normal shock: E[f(Z)] ~ sum_i w_i f(z_i).
/// This is what the solver consumes; it carries no symmetry guarantees and may
/// hold Monte Carlo draws with equal weights.
struct ShockGrid {
  std::vector<double> knots;
  std::vector<double> weights;

  std::size_t size() const { return knots.size(); }
};

/// Symmetric quadrature rule for N(0, 1) with positive weights summing to one.
class QuadratureRule {
 public:
  QuadratureRule(std::vector<double> knots, std::vector<double> weights)
      : knots_(std::move(knots)), weights_(std::move(weights)) {
    check();
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return knots_.size(); }

  ShockGrid shocks() const { return {knots_, weights_}; }

 private:
  void check() const {
    detail::require(!knots_.empty() && knots_.size() == weights_.size(),
                    "quadrature rule: knots and weights must be non-empty and equally long");
    double sum = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      detail::require(std::isfinite(knots_[i]) && std::isfinite(weights_[i]),
                      "quadrature rule: non-finite entry");
      detail::require(weights_[i] >= 0.0, "quadrature rule: negative weight");
      if (i > 0) detail::require(knots_[i] > knots_[i - 1], "quadrature rule: knots must be strictly increasing");
      sum += weights_[i];
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "quadrature rule: weights must sum to one");
    const std::size_t n = knots_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = std::max(1.0, std::abs(knots_[i]));
      detail::require(std::abs(knots_[i] + knots_[n - 1 - i]) <= 1e-12 * scale &&
                          std::abs(weights_[i] - weights_[n - 1 - i]) <= 1e-12,
                      "quadrature rule: knots must be symmetric about zero");
    }
  }

  std::vector<double> knots_;
  std::vector<double> weights_;
};

/// Gauss-Hermite rule rescaled to the standard normal: knot = sqrt(2) x_i,
/// weight = w_i / sqrt(pi). Exact for polynomials of degree <= 2I - 1.
inline QuadratureRule gaussian_rule(int size) {
  detail::require(size >= 1, "gaussian_rule: size must be >= 1");
  const int n = size;
  const int half = (n + 1) / 2;
  // Newton iteration on orthonormal Hermite polynomials, roots in descending order.
  std::vector<double> x(half), w(half);
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 3e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    w[i] = 2.0 / (pp * pp);
  }
  if (n % 2 == 1) x[half - 1] = 0.0;

  std::vector<double> knots(n), weights(n);
  for (int i = 0; i < half; ++i) {
    const double k = std::numbers::sqrt2 * x[i];
    const double wt = w[i] / std::sqrt(std::numbers::pi);
    knots[n - 1 - i] = k;
    knots[i] = -k;
    weights[n - 1 - i] = wt;
    weights[i] = wt;
  }
  // Remove the last few ulps of drift in the normalisation.
  double sum = 0.0;
  for (double v : weights) sum += v;
  for (double& v : weights) v /= sum;
  return QuadratureRule(std::move(knots), std::move(weights));
}

/// Reads a two-column "knot weight" text file (commas or whitespace, '#' comments).
/// Weights are renormalised when they sum to one within 1e-6.
inline QuadratureRule load_rule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open quadrature file: " + path);
  std::vector<double> knots, weights;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double k, w;
    if (!(ss >> k)) continue;
    if (!(ss >> w)) throw ValidationError("quadrature file: expected two columns in " + path);
    knots.push_back(k);
    weights.push_back(w);
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  detail::require(std::abs(sum - 1.0) <= 1e-6, "quadrature file: weights must sum to one");
  for (double& w : weights) w /= sum;
  return QuadratureRule(std::move(knots), std::move(weights));
}

inline void save_rule_csv(const QuadratureRule& rule, std::ostream& out) {
  out.precision(17);
  out << "knot,weight\n";
  for (std::size_t i = 0; i < rule.size(); ++i) out << rule.knots()[i] << ',' << rule.weights()[i] << '\n';
}

template <class F>
double expect(const ShockGrid& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double v = f(rule.knots[i]);
    if (!std::isfinite(v)) throw NumericError("expect: non-finite integrand at a knot");
    acc += v * rule.weights[i];
  }
  return acc;
}

template <class F>
double expect(const QuadratureRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double v = f(rule.knots()[i]);
    if (!std::isfinite(v)) throw NumericError("expect: non-finite integrand at a knot");
    acc += v * rule.weights()[i];
  }
  return acc;
}

/// Plain Monte Carlo mean of f(Z) over `samples` standard normal draws.
template <class F>
double mc_expect(F&& f, int samples, Rng& rng) {
  detail::require(samples >= 1, "mc_expect: sample count must be >= 1");
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double v = f(standard_normal(rng));
    if (!std::isfinite(v)) throw NumericError("mc_expect: non-finite sample");
    acc += v;
  }
  return acc / samples;
}

/// Equal-weight grid of i.i.d. standard normal draws.
inline ShockGrid monte_carlo_shocks(int samples, Rng& rng) {
  detail::require(samples >= 1, "monte_carlo_shocks: sample count must be >= 1");
  ShockGrid g;
  g.knots.resize(samples);
  g.weights.assign(samples, 1.0 / samples);
  for (auto& z : g.knots) z = standard_normal(rng);
  return g;
}

}  // namespace robustbell
