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
#include <limits>
#include <optional>

#include "robustbell/errors.hpp"

namespace robustbell {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Brent's bracketed minimiser (golden section with parabolic steps). Returns a
/// local minimiser on [lo, hi] to within tol; f is never evaluated outside the
/// interval. `start` seeds the first interior point (defaults to the golden
/// point).
template <class F>
ScalarMinimum minimize_scalar(F&& f, double lo, double hi, double tol = 1e-6,
                              std::optional<double> start = std::nullopt, int max_evaluations = 500) {
  detail::require(lo < hi, "minimize_scalar: require lo < hi");
  detail::require(tol > 0.0, "minimize_scalar: tol must be positive");
  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

  int evals = 0;
  auto eval = [&](double x) {
    x = std::clamp(x, lo, hi);
    const double v = f(x);
    ++evals;
    if (!std::isfinite(v)) throw NumericError("minimize_scalar: objective is not finite");
    return v;
  };

  double a = lo, b = hi;
  double x = start ? std::clamp(*start, lo, hi) : a + golden * (b - a);
  double w = x, v = x;
  double fx = eval(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  while (evals < max_evaluations) {
    const double xm = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

    bool golden_step = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= xm) ? a - x : b - x;
      d = golden * e;
    }
    const double u = std::clamp(std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d), lo, hi);
    const double fu = eval(u);

    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, evals};
}

/// minimize_scalar followed by a comparison against f(lo) and f(hi); ties keep
/// the interior point.
template <class F>
ScalarMinimum minimize_scalar_with_endpoints(F&& f, double lo, double hi, double tol = 1e-6,
                                             std::optional<double> start = std::nullopt) {
  ScalarMinimum best = minimize_scalar(f, lo, hi, tol, start);
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    ++best.evaluations;
    if (!std::isfinite(fe)) throw NumericError("minimize_scalar: objective is not finite");
    if (fe < best.value) {
      best.x = edge;
      best.value = fe;
    }
  }
  return best;
}

}  // namespace robustbell
