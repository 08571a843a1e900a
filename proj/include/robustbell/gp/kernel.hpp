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
#include <cstddef>
#include <string>
#include <vector>

#include "robustbell/errors.hpp"

namespace robustbell {

enum class KernelFamily { matern52, squared_exponential };

inline const char* to_string(KernelFamily f) {
  return f == KernelFamily::matern52 ? "matern52" : "squared_exponential";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "matern52") return KernelFamily::matern52;
  if (s == "squared_exponential" || s == "sqexp") return KernelFamily::squared_exponential;
  throw ValidationError("unknown kernel family: " + s);
}

/// Anisotropic stationary kernel with process variance tau2, one lengthscale
/// per input dimension, and observation noise sd `nugget` (added as nugget^2).
struct KernelSpec {
  KernelFamily family = KernelFamily::matern52;
  double tau2 = 1.0;
  std::vector<double> lengthscales;
  double nugget = 1e-5;

  std::size_t dimension() const { return lengthscales.size(); }

  void validate() const {
    detail::require(tau2 > 0.0 && std::isfinite(tau2), "kernel: tau2 must be positive");
    detail::require(!lengthscales.empty(), "kernel: need at least one lengthscale");
    for (double l : lengthscales) detail::require(l > 0.0 && std::isfinite(l), "kernel: lengthscales must be positive");
    detail::require(nugget >= 0.0, "kernel: nugget must be >= 0");
  }
};

namespace detail {

// inv_ls holds 1 / lengthscale per dimension.
inline double kernel_raw(KernelFamily family, double tau2, const double* inv_ls, const double* x,
                         const double* y, std::size_t d) {
  if (family == KernelFamily::matern52) {
    constexpr double s5 = 2.23606797749978969641;
    double sum = 0.0, prod = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double a = s5 * std::abs(x[i] - y[i]) * inv_ls[i];
      sum += a;
      prod *= 1.0 + a + a * a / 3.0;
    }
    return tau2 * prod * std::exp(-sum);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double t = (x[i] - y[i]) * inv_ls[i];
    sum += t * t;
  }
  return tau2 * std::exp(-0.5 * sum);
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t d = spec.dimension();
  if (x.size() != d || y.size() != d) throw ValidationError("kernel_eval: dimension mismatch");
  std::vector<double> inv(d);
  for (std::size_t i = 0; i < d; ++i) inv[i] = 1.0 / spec.lengthscales[i];
  return detail::kernel_raw(spec.family, spec.tau2, inv.data(), x.data(), y.data(), d);
}

}  // namespace robustbell
