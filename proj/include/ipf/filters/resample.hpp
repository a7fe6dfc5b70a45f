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

#ifndef IPF_FILTERS_RESAMPLE_HPP
#define IPF_FILTERS_RESAMPLE_HPP

#include <cmath>
#include <span>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/random.hpp"
#include "ipf/filters/weights.hpp"

namespace ipf {

/// Systematic resampling with offset `u0` in [0, 1): output slot i takes the
/// particle whose cumulative-weight interval contains (u0 + i) / M.
inline std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u0) {
  require(u0 >= 0.0 && u0 < 1.0, "systematic offset must lie in [0, 1)");
  effective_sample_size(weights);  // validates normalization
  const std::size_t m = weights.size();
  std::vector<double> cumulative(m);
  double running = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    running += weights[j];
    cumulative[j] = running;
  }
  cumulative.back() = 1.0;
  std::vector<std::size_t> indices(m);
  std::size_t j = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double position = (u0 + static_cast<double>(i)) / static_cast<double>(m);
    while (j + 1 < m && position >= cumulative[j]) {
      ++j;
    }
    indices[i] = j;
  }
  return indices;
}

inline std::vector<std::size_t> systematic_indices(std::span<const double> weights, Rng& rng) {
  return systematic_indices(weights, uniform01(rng));
}

/// Number of copies of each particle.
inline std::vector<std::size_t> offspring_counts(std::span<const std::size_t> indices, std::size_t m) {
  std::vector<std::size_t> counts(m, 0);
  for (const std::size_t i : indices) {
    require(i < m, "resampled index out of range");
    ++counts[i];
  }
  return counts;
}

/// Resampled ensemble with uniform weights 1/M.
inline Ensemble resample_systematic(const Ensemble& ensemble, Rng& rng) {
  const std::vector<double> w = ensemble.weights();
  const std::vector<std::size_t> idx = systematic_indices(w, rng);
  Ensemble out;
  out.time = ensemble.time;
  out.particles.reserve(idx.size());
  const double uniform = 1.0 / static_cast<double>(idx.size());
  for (const std::size_t i : idx) {
    Particle p = ensemble.particles[i];
    p.weight = uniform;
    out.particles.push_back(std::move(p));
  }
  return out;
}

}  // namespace ipf

#endif  // IPF_FILTERS_RESAMPLE_HPP
