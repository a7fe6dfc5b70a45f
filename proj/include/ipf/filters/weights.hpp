// Copyright 2026 The ipf Authors.
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

#ifndef IPF_FILTERS_WEIGHTS_HPP
#define IPF_FILTERS_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ipf/core/errors.hpp"

namespace ipf {

inline constexpr double kNormalizationTolerance = 1e-8;

/// exp(log_w) / sum(exp(log_w)), computed without overflow.
inline std::vector<double> normalize_log_weights(std::span<const double> log_w) {
  double top = -std::numeric_limits<double>::infinity();
  for (const double v : log_w) {
    if (std::isfinite(v)) {
      top = std::max(top, v);
    }
  }
  if (!std::isfinite(top)) {
    throw FilterDivergence("filter divergence: every particle weight is zero");
  }
  std::vector<double> w(log_w.size());
  double total = 0.0;
  for (std::size_t j = 0; j < log_w.size(); ++j) {
    w[j] = std::isfinite(log_w[j]) ? std::exp(log_w[j] - top) : 0.0;
    total += w[j];
  }
  for (double& v : w) {
    v /= total;
  }
  return w;
}

/// 1 / sum(w^2) for normalized weights.
inline double effective_sample_size(std::span<const double> weights) {
  require(!weights.empty(), "effective sample size of an empty weight vector");
  double total = 0.0;
  double squares = 0.0;
  for (const double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "weights must be finite and non-negative");
    total += w;
    squares += w * w;
  }
  require(std::abs(total - 1.0) <= kNormalizationTolerance, "weights are not normalized");
  return 1.0 / squares;
}

}  // namespace ipf

#endif  // IPF_FILTERS_WEIGHTS_HPP
