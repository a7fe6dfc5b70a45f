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

#ifndef IPF_CORE_ENSEMBLE_HPP
#define IPF_CORE_ENSEMBLE_HPP

#include <cmath>
#include <span>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"

namespace ipf {

/// Observation number `index` (1-based), taken at model step `time = index * gap`.
struct Observation {
  Vector z;
  Index index = 0;
  Index time = 0;
};

inline Observation make_observation(Vector z, Index index, Index gap) {
  require(index >= 1, "observation index starts at 1");
  require(gap >= 1, "observation gap must be at least 1");
  return Observation{std::move(z), index, index * gap};
}

/// `y` is empty for full-noise models. `trajectory` is filled only on request;
/// each entry is the stacked state [x; y] after one model step.
struct Particle {
  Vector x;
  Vector y;
  double weight = 0.0;
  std::vector<Vector> trajectory;

  [[nodiscard]] Vector stacked() const {
    if (y.size() == 0) {
      return x;
    }
    Vector out(x.size() + y.size());
    out << x, y;
    return out;
  }
};

/// Particles at model step `time`; weights sum to one.
struct Ensemble {
  std::vector<Particle> particles;
  Index time = 0;

  [[nodiscard]] std::size_t size() const { return particles.size(); }

  [[nodiscard]] std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(particles.size());
    for (const auto& p : particles) {
      w.push_back(p.weight);
    }
    return w;
  }

  [[nodiscard]] Vector weighted_mean() const {
    require(!particles.empty(), "empty ensemble");
    Vector mean = Vector::Zero(particles.front().stacked().size());
    for (const auto& p : particles) {
      mean += p.weight * p.stacked();
    }
    return mean;
  }
};

/// M equally weighted copies of `x` (and `y`).
inline Ensemble make_ensemble(const std::vector<Vector>& states, const std::vector<Vector>& unforced = {}) {
  require(!states.empty(), "an ensemble needs at least one particle");
  require(unforced.empty() || unforced.size() == states.size(), "forced and unforced counts differ");
  Ensemble ens;
  const double w = 1.0 / static_cast<double>(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    Particle p;
    p.x = states[j];
    if (!unforced.empty()) {
      p.y = unforced[j];
    }
    p.weight = w;
    ens.particles.push_back(std::move(p));
  }
  return ens;
}

}  // namespace ipf

#endif  // IPF_CORE_ENSEMBLE_HPP
