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

#include <array>
#include <cstdint>
#include <vector>

#include "robustbell/errors.hpp"

namespace robustbell {

/// Gray-code Sobol generator with Joe-Kuo direction numbers, up to 8 dimensions.
class SobolSequence {
 public:
  static constexpr int max_dimension = 8;
  static constexpr int bits = 32;

  explicit SobolSequence(int dimension) : dim_(dimension), state_(dimension, 0u), v_(dimension) {
    if (dimension < 1 || dimension > max_dimension)
      throw ValidationError("sobol: dimension must lie in [1, 8]");
    struct Poly {
      int s;
      unsigned a;
      std::array<unsigned, 5> m;
    };
    static constexpr std::array<Poly, max_dimension - 1> table{{
        {1, 0, {1, 0, 0, 0, 0}},
        {2, 1, {1, 3, 0, 0, 0}},
        {3, 1, {1, 3, 1, 0, 0}},
        {3, 2, {1, 1, 1, 0, 0}},
        {4, 1, {1, 1, 3, 3, 0}},
        {4, 4, {1, 3, 5, 13, 0}},
        {5, 2, {1, 1, 5, 5, 17}},
    }};
    for (int j = 0; j < bits; ++j) v_[0][j] = 1u << (bits - 1 - j);
    for (int d = 1; d < dim_; ++d) {
      const Poly& p = table[d - 1];
      auto& v = v_[d];
      for (int j = 0; j < p.s && j < bits; ++j) v[j] = p.m[j] << (bits - 1 - j);
      for (int j = p.s; j < bits; ++j) {
        std::uint32_t x = v[j - p.s] ^ (v[j - p.s] >> p.s);
        for (int k = 1; k < p.s; ++k)
          if ((p.a >> (p.s - 1 - k)) & 1u) x ^= v[j - k];
        v[j] = x;
      }
    }
  }

  int dimension() const { return dim_; }

  /// Next point; the first call returns the origin.
  std::vector<double> next() {
    std::vector<double> out(dim_);
    for (int d = 0; d < dim_; ++d) out[d] = static_cast<double>(state_[d]) / 4294967296.0;
    int c = 0;
    for (std::uint64_t i = index_; i & 1u; i >>= 1) ++c;
    if (c >= bits) throw NumericError("sobol: sequence exhausted");
    for (int d = 0; d < dim_; ++d) state_[d] ^= v_[d][c];
    ++index_;
    return out;
  }

  void skip(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) next();
  }

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::array<std::uint32_t, bits>> v_;
};

/// First n points after `skip` burn-in points. The default skip drops the origin.
inline std::vector<std::vector<double>> sobol(int n, int d, int skip = 1) {
  detail::require(n >= 1, "sobol: n must be >= 1");
  detail::require(skip >= 0, "sobol: skip must be >= 0");
  SobolSequence seq(d);
  seq.skip(static_cast<std::uint64_t>(skip));
  std::vector<std::vector<double>> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(seq.next());
  return pts;
}

}  // namespace robustbell
