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

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "robustbell/errors.hpp"
#include "robustbell/gp/kernel.hpp"
#include "robustbell/numerics/nelder_mead.hpp"

namespace robustbell {

/// Affine map x -> (x - offset) / scale applied per input dimension.
struct InputTransform {
  std::vector<double> offset;
  std::vector<double> scale;

  static InputTransform unit_box(const std::vector<std::vector<double>>& x) {
    const std::size_t d = x.front().size();
    InputTransform t{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t j = 0; j < d; ++j) {
      double lo = x.front()[j], hi = lo;
      for (const auto& row : x) {
        lo = std::min(lo, row[j]);
        hi = std::max(hi, row[j]);
      }
      t.offset[j] = lo;
      t.scale[j] = hi > lo ? hi - lo : 1.0;
    }
    return t;
  }

  static InputTransform identity(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  }
};

/// Gaussian-process regression model with a constant prior mean. Training
/// inputs are mapped through an InputTransform before the kernel sees them, so
/// lengthscales are expressed in transformed units.
class GpSurrogate {
 public:
  GpSurrogate(std::vector<std::vector<double>> inputs, std::vector<double> outputs, KernelSpec kernel,
              double prior_mean, InputTransform transform)
      : inputs_(std::move(inputs)),
        outputs_(std::move(outputs)),
        kernel_(std::move(kernel)),
        prior_mean_(prior_mean),
        transform_(std::move(transform)) {
    detail::require(!inputs_.empty(), "gp: need at least one training site");
    detail::require(inputs_.size() == outputs_.size(), "gp: inputs and outputs differ in length");
    kernel_.validate();
    d_ = kernel_.dimension();
    detail::require(transform_.offset.size() == d_ && transform_.scale.size() == d_,
                    "gp: transform dimension mismatch");
    n_ = inputs_.size();
    x_.resize(n_ * d_);
    for (std::size_t i = 0; i < n_; ++i) {
      detail::require(inputs_[i].size() == d_, "gp: training site dimension mismatch");
      detail::require(std::isfinite(outputs_[i]), "gp: non-finite training output");
      to_unit(inputs_[i].data(), &x_[i * d_]);
    }
    inv_ls_.resize(d_);
    for (std::size_t j = 0; j < d_; ++j) inv_ls_[j] = 1.0 / kernel_.lengthscales[j];
    factorize();
    solve_alpha();
  }

  std::size_t size() const { return n_; }
  std::size_t dimension() const { return d_; }
  const KernelSpec& kernel() const { return kernel_; }
  double prior_mean() const { return prior_mean_; }
  const InputTransform& transform() const { return transform_; }
  const std::vector<std::vector<double>>& inputs() const { return inputs_; }
  const std::vector<double>& outputs() const { return outputs_; }

  double predict_mean(std::span<const double> x) const {
    check_dim(x.size());
    double u[16];
    to_unit(x.data(), u);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) acc += k_unit(u, &x_[i * d_]) * alpha_[i];
    return prior_mean_ + acc;
  }
  double predict_mean(std::initializer_list<double> x) const {
    return predict_mean(std::span<const double>(x.begin(), x.size()));
  }

  double predict_cov(std::span<const double> x, std::span<const double> y) const {
    check_dim(x.size());
    check_dim(y.size());
    double ux[16], uy[16];
    to_unit(x.data(), ux);
    to_unit(y.data(), uy);
    Eigen::VectorXd kx(n_), ky(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      kx[i] = k_unit(ux, &x_[i * d_]);
      ky[i] = k_unit(uy, &x_[i * d_]);
    }
    const auto L = llt_.matrixL();
    const Eigen::VectorXd a = L.solve(kx);
    const Eigen::VectorXd b = L.solve(ky);
    return k_unit(ux, uy) - a.dot(b);
  }

  double predict_var(std::span<const double> x) const { return std::max(0.0, predict_cov(x, x)); }

  /// -0.5 v'alpha - sum log diag(L) - (N/2) log(2 pi), v the centred outputs.
  double log_marginal_likelihood() const {
    double v_alpha = 0.0;
    for (std::size_t i = 0; i < n_; ++i) v_alpha += (outputs_[i] - prior_mean_) * alpha_[i];
    const auto& L = llt_.matrixLLT();
    double logdet = 0.0;
    for (std::size_t i = 0; i < n_; ++i) logdet += std::log(L(i, i));
    return -0.5 * v_alpha - logdet - 0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi);
  }

  /// Same sites and hyperparameters, new outputs; reuses the factorisation.
  GpSurrogate with_outputs(std::vector<double> outputs, double prior_mean) const {
    detail::require(outputs.size() == n_, "gp: with_outputs size mismatch");
    GpSurrogate copy(*this);
    copy.outputs_ = std::move(outputs);
    copy.prior_mean_ = prior_mean;
    for (double v : copy.outputs_) detail::require(std::isfinite(v), "gp: non-finite training output");
    copy.solve_alpha();
    return copy;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["family"] = to_string(kernel_.family);
    j["tau2"] = kernel_.tau2;
    j["lengthscales"] = kernel_.lengthscales;
    j["nugget"] = kernel_.nugget;
    j["prior_mean"] = prior_mean_;
    j["transform"] = {{"offset", transform_.offset}, {"scale", transform_.scale}};
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    return j;
  }

  static GpSurrogate from_json(const nlohmann::json& j) {
    try {
      KernelSpec k;
      k.family = kernel_family_from_string(j.at("family").get<std::string>());
      k.tau2 = j.at("tau2").get<double>();
      k.lengthscales = j.at("lengthscales").get<std::vector<double>>();
      k.nugget = j.at("nugget").get<double>();
      InputTransform t{j.at("transform").at("offset").get<std::vector<double>>(),
                       j.at("transform").at("scale").get<std::vector<double>>()};
      return GpSurrogate(j.at("inputs").get<std::vector<std::vector<double>>>(),
                         j.at("outputs").get<std::vector<double>>(), std::move(k),
                         j.at("prior_mean").get<double>(), std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("gp document: ") + e.what());
    }
  }

 private:
  void check_dim(std::size_t d) const {
    if (d != d_) throw ValidationError("gp: query dimension mismatch");
  }

  void to_unit(const double* x, double* u) const {
    for (std::size_t j = 0; j < d_; ++j) u[j] = (x[j] - transform_.offset[j]) / transform_.scale[j];
  }

  double k_unit(const double* a, const double* b) const {
    return detail::kernel_raw(kernel_.family, kernel_.tau2, inv_ls_.data(), a, b, d_);
  }

  // Cholesky of K + nugget^2 I; on failure the nugget is doubled up to 1e-2.
  void factorize() {
    Eigen::MatrixXd K(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j) K(i, j) = K(j, i) = k_unit(&x_[i * d_], &x_[j * d_]);
    double eta = kernel_.nugget;
    for (;;) {
      Eigen::MatrixXd A = K;
      A.diagonal().array() += eta * eta;
      llt_.compute(A);
      bool ok = llt_.info() == Eigen::Success;
      if (ok) {
        const auto& L = llt_.matrixLLT();
        for (std::size_t i = 0; i < n_ && ok; ++i) ok = L(i, i) > 0.0 && std::isfinite(L(i, i));
      }
      if (ok) {
        kernel_.nugget = eta;
        return;
      }
      const double next = eta > 0.0 ? 2.0 * eta : 1e-8;
      if (next > 1e-2) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        std::ostringstream msg;
        msg << "gp: kernel matrix factorisation failed (N=" << n_ << ", nugget=" << eta
            << ", condition estimate " << ev.maxCoeff() / std::max(std::abs(ev.minCoeff()), 1e-300) << ")";
        throw NumericError(msg.str());
      }
      eta = next;
    }
  }

  void solve_alpha() {
    Eigen::VectorXd y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = outputs_[i] - prior_mean_;
    alpha_ = llt_.solve(y);
  }

  std::vector<std::vector<double>> inputs_;
  std::vector<double> outputs_;
  KernelSpec kernel_;
  double prior_mean_ = 0.0;
  InputTransform transform_;
  std::size_t n_ = 0, d_ = 0;
  std::vector<double> x_;
  std::vector<double> inv_ls_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
  bool freeze = false;           // use the initial hyperparameters as given
  int restarts = 5;              // deterministic multi-start count
  int max_evaluations = 200;     // per restart
  double nugget = 1e-5;
  std::optional<double> prior_mean;  // default: mean of the outputs
  bool rescale_inputs = true;
};

namespace detail {

// Negative log marginal likelihood for hyperparameters in log space, working
// on precomputed absolute coordinate differences.
class GpLikelihood {
 public:
  GpLikelihood(const std::vector<std::vector<double>>& unit_x, const std::vector<double>& centred,
               KernelFamily family, double nugget)
      : n_(unit_x.size()), d_(unit_x.front().size()), family_(family), nugget2_(nugget * nugget), y_(n_) {
    diffs_.reserve(n_ * (n_ - 1) / 2 * d_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < i; ++j)
        for (std::size_t k = 0; k < d_; ++k) diffs_.push_back(std::abs(unit_x[i][k] - unit_x[j][k]));
    for (std::size_t i = 0; i < n_; ++i) y_[i] = centred[i];
    K_.resize(n_, n_);
  }

  double operator()(const std::vector<double>& logp) {
    const double tau2 = std::exp(logp[0]);
    std::vector<double> inv(d_);
    for (std::size_t k = 0; k < d_; ++k) inv[k] = std::exp(-logp[k + 1]);
    const double zero[16] = {};
    std::size_t p = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      K_(i, i) = tau2 + nugget2_;
      for (std::size_t j = 0; j < i; ++j, p += d_) K_(i, j) = kernel_raw(family_, tau2, inv.data(), &diffs_[p], zero, d_);
    }
    llt_.compute(K_);
    if (llt_.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const auto& L = llt_.matrixLLT();
    double logdet = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!(L(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
      logdet += std::log(L(i, i));
    }
    const Eigen::VectorXd a = llt_.solve(y_);
    return 0.5 * y_.dot(a) + logdet + 0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi);
  }

 private:
  std::size_t n_, d_;
  KernelFamily family_;
  double nugget2_;
  std::vector<double> diffs_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd K_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace detail

/// Maximum-likelihood GP fit. Exact duplicate sites are merged by averaging
/// their outputs. With opts.freeze the initial hyperparameters are used as is.
inline GpSurrogate fit(const std::vector<std::vector<double>>& X, const std::vector<double>& v, KernelFamily family,
                       const std::optional<KernelSpec>& init = std::nullopt, const FitOptions& opts = {}) {
  detail::require(X.size() == v.size(), "gp fit: inputs and outputs differ in length");
  detail::require(!X.empty(), "gp fit: need at least 2 training sites");
  const std::size_t d = X.front().size();
  detail::require(d >= 1 && d <= 16, "gp fit: input dimension must lie in [1, 16]");

  std::vector<std::vector<double>> xs;
  std::vector<double> sums;
  std::vector<int> counts;
  std::map<std::vector<double>, std::size_t> seen;
  for (std::size_t i = 0; i < X.size(); ++i) {
    detail::require(X[i].size() == d, "gp fit: inconsistent site dimension");
    detail::require(std::isfinite(v[i]), "gp fit: non-finite output");
    for (double c : X[i]) detail::require(std::isfinite(c), "gp fit: non-finite input");
    auto [it, fresh] = seen.emplace(X[i], xs.size());
    if (fresh) {
      xs.push_back(X[i]);
      sums.push_back(v[i]);
      counts.push_back(1);
    } else {
      sums[it->second] += v[i];
      counts[it->second] += 1;
    }
  }
  detail::require(xs.size() >= 2, "gp fit: need at least 2 distinct training sites");
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = sums[i] / counts[i];

  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double var = 0.0;
  for (double y : ys) var += (y - mean) * (y - mean);
  var /= static_cast<double>(ys.size());
  const double m0 = opts.prior_mean.value_or(mean);
  const double var_scale = var > 0.0 ? var : 1.0;

  InputTransform t = opts.rescale_inputs ? InputTransform::unit_box(xs) : InputTransform::identity(d);

  KernelSpec start;
  start.family = family;
  start.nugget = opts.nugget;
  if (init && init->dimension() == d) {
    start.tau2 = init->tau2;
    start.lengthscales = init->lengthscales;
  } else {
    start.tau2 = var_scale;
    start.lengthscales.assign(d, 0.5);
  }

  if (opts.freeze) {
    detail::require(init.has_value(), "gp fit: freeze requires initial hyperparameters");
    return GpSurrogate(std::move(xs), std::move(ys), std::move(start), m0, std::move(t));
  }

  std::vector<std::vector<double>> unit(xs.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) unit[i][j] = (xs[i][j] - t.offset[j]) / t.scale[j];
  std::vector<double> centred(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) centred[i] = ys[i] - m0;
  detail::GpLikelihood nll(unit, centred, family, opts.nugget);

  std::vector<double> lo(d + 1), hi(d + 1);
  lo[0] = std::log(1e-6 * var_scale);
  hi[0] = std::log(1e6 * var_scale);
  for (std::size_t j = 1; j <= d; ++j) {
    lo[j] = std::log(1e-3);
    hi[j] = std::log(1e3);
  }
  std::vector<double> base(d + 1);
  base[0] = std::log(start.tau2);
  for (std::size_t j = 0; j < d; ++j) base[j + 1] = std::log(start.lengthscales[j]);

  // Restart offsets in log space: (tau2 shift, lengthscale shift).
  static constexpr double offsets[][2] = {{0.0, 0.0}, {0.0, -1.2}, {0.0, 1.2}, {-1.5, -2.3}, {2.0, 0.6}};
  const int restarts = std::max(1, opts.restarts);
  std::vector<double> best;
  double best_val = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> x0 = base;
    const auto& off = offsets[r % 5];
    const double spread = 1.0 + r / 5;
    x0[0] += off[0] * spread;
    for (std::size_t j = 1; j <= d; ++j) x0[j] += off[1] * spread;
    auto res = nelder_mead(nll, x0, lo, hi, 0.7, 1e-9, opts.max_evaluations);
    if (res.value < best_val) {
      best_val = res.value;
      best = res.x;
    }
  }
  if (best.empty()) best = base;  // every trial failed; fall back to jitter escalation

  KernelSpec fitted = start;
  fitted.tau2 = std::exp(best[0]);
  for (std::size_t j = 0; j < d; ++j) fitted.lengthscales[j] = std::exp(best[j + 1]);
  return GpSurrogate(std::move(xs), std::move(ys), std::move(fitted), m0, std::move(t));
}

}  // namespace robustbell
