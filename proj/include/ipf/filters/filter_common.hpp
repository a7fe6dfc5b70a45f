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

#ifndef IPF_FILTERS_FILTER_COMMON_HPP
#define IPF_FILTERS_FILTER_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/random.hpp"
#include "ipf/filters/diagnostics.hpp"
#include "ipf/filters/minimize.hpp"
#include "ipf/filters/random_map.hpp"
#include "ipf/filters/resample.hpp"
#include "ipf/filters/weights.hpp"

namespace ipf {

/// Diagonal of L in X = mu + lambda L eta.
enum class MapScaling {
  kIdentity,
  kNoiseStd,  // square roots of the model noise variances, repeated per step
  kCustom,    // `FilterOptions::custom_scaling`, one block, repeated per step
};

/// How the partial-noise filter differentiates its objective.
enum class GradientMode { kAdjoint, kForward };

struct FilterOptions {
  DescentOptions descent{};
  LambdaOptions lambda{};
  double resample_threshold = 0.9;
  std::uint64_t seed = 0;
  MapScaling scaling = MapScaling::kIdentity;
  Vector custom_scaling;
  GradientMode gradient = GradientMode::kAdjoint;
  bool keep_trajectory = false;
  DiagnosticsLog* log = nullptr;
};

struct AssimilationResult {
  Ensemble ensemble;
  Vector estimate;
  std::vector<double> weights;  // normalized, before any resampling
  double ess = 0.0;
  bool resampled = false;
  Index failed = 0;
  std::vector<ParticleDiagnostics> diagnostics;
};

namespace detail {

inline void check_step(const Ensemble& ensemble, const Observation& obs, Index gap) {
  require(!ensemble.particles.empty(), "empty ensemble");
  require(obs.time == ensemble.time + gap, "observation time does not follow the ensemble time by one gap");
}

/// Diagonal of L for one block of size `block`, or empty for L = I.
inline Vector block_scaling(const FilterOptions& opts, const Vector& noise_variance, Index block) {
  switch (opts.scaling) {
    case MapScaling::kIdentity:
      return Vector();
    case MapScaling::kNoiseStd:
      require(noise_variance.size() == block, "noise-scaled map needs a diagonal noise covariance");
      return noise_variance.cwiseSqrt();
    case MapScaling::kCustom:
      require(opts.custom_scaling.size() == block, "custom map scaling has the wrong length");
      return opts.custom_scaling;
  }
  return Vector();
}

inline double log_abs_det(const Vector& scaling) {
  return scaling.size() == 0 ? 0.0 : scaling.cwiseAbs().array().log().sum();
}

/// Normalizes, estimates, and resamples below the ESS threshold.
inline AssimilationResult finalize(std::vector<Particle> particles, const std::vector<double>& log_w, Index time,
                                   const Observation& obs, const FilterOptions& opts,
                                   std::vector<ParticleDiagnostics> diagnostics) {
  AssimilationResult result;
  result.weights = normalize_log_weights(log_w);
  for (std::size_t j = 0; j < particles.size(); ++j) {
    particles[j].weight = result.weights[j];
    if (!std::isfinite(log_w[j])) {
      ++result.failed;
    }
  }
  for (auto& d : diagnostics) {
    d.weight = result.weights[static_cast<std::size_t>(d.particle)];
  }
  result.ensemble.particles = std::move(particles);
  result.ensemble.time = time;
  result.estimate = result.ensemble.weighted_mean();
  result.ess = effective_sample_size(result.weights);
  const double m = static_cast<double>(result.weights.size());
  if (result.ess < opts.resample_threshold * m) {
    Rng rng = make_stream(opts.seed, Stream::kResample, static_cast<std::uint64_t>(obs.index));
    result.ensemble = resample_systematic(result.ensemble, rng);
    result.resampled = true;
  }
  if (opts.log != nullptr) {
    opts.log->write(diagnostics);
  }
  result.diagnostics = std::move(diagnostics);
  return result;
}

inline double prior_log_weight(const Particle& p) {
  return p.weight > 0.0 ? std::log(p.weight) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

}  // namespace ipf

#endif  // IPF_FILTERS_FILTER_COMMON_HPP
