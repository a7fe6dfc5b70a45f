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

#ifndef IPF_FILTERS_BASELINES_HPP
#define IPF_FILTERS_BASELINES_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/partial_noise.hpp"
#include "ipf/core/random.hpp"
#include "ipf/core/state_space.hpp"
#include "ipf/filters/filter_common.hpp"

namespace ipf {

namespace detail {

/// Advances one particle over the gap with model noise. All noise for the
/// gap is drawn up front from the particle's proposal stream.
inline Particle forecast_particle(const StateSpaceModel& model, const Particle& prior, Index first, Rng& rng) {
  const Index rank = model.noise.rank;
  const Vector draws = standard_normal(model.gap * rank, rng);
  Particle next;
  next.x = prior.x;
  for (Index k = 0; k < model.gap; ++k) {
    next.x = model.drift(next.x, first + k) + model.noise.color(draws.segment(k * rank, rank));
  }
  return next;
}

inline Particle forecast_particle(const PartialNoiseModel& pm, const Particle& prior, Index first, Rng& rng) {
  const Index p = pm.forced_dim;
  const Vector draws = standard_normal(pm.gap * p, rng);
  const Vector noise_std = pm.forced_variance.cwiseSqrt();
  Particle next;
  next.x = prior.x;
  next.y = prior.y;
  for (Index k = 0; k < pm.gap; ++k) {
    SplitVector step = pm.transition(next.x, next.y, first + k);
    next.x = step.forced + noise_std.cwiseProduct(draws.segment(k * p, p));
    next.y = std::move(step.unforced);
  }
  return next;
}

inline Vector predict(const StateSpaceModel& model, const Particle& p) { return model.observe(p.x); }
inline Vector predict(const PartialNoiseModel& pm, const Particle& p) { return pm.observe(p.x, p.y); }

template <class Model>
AssimilationResult sir_step_impl(const Model& model, const Ensemble& ensemble, const Observation& obs,
                                 const FilterOptions& opts) {
  model.validate();
  check_step(ensemble, obs, model.gap);
  const Index first = obs.time - model.gap;
  std::vector<Particle> particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  particles.reserve(ensemble.size());
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    Particle next = forecast_particle(model, ensemble.particles[j], first, rng);
    const double misfit = 0.5 * model.obs_noise.mahalanobis(predict(model, next) - obs.z);
    log_w.push_back(prior_log_weight(ensemble.particles[j]) - misfit);
    diagnostics.push_back({obs.index, static_cast<Index>(j), misfit, 0.0, 0.0, 0, 0, 0.0, 0.0, 0, false});
    particles.push_back(std::move(next));
  }
  return finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

/// Affine observation operator acting on the stacked particle state.
inline AffineObservation stacked_observation(const StateSpaceModel& model) {
  require(model.linear_obs.has_value(), "the ensemble Kalman filter needs an affine observation operator");
  return *model.linear_obs;
}

inline AffineObservation stacked_observation(const PartialNoiseModel& pm) {
  require(pm.linear_obs.has_value(), "the ensemble Kalman filter needs an affine observation operator");
  Matrix h(pm.obs_dim(), pm.forced_dim + pm.unforced_dim);
  h << pm.linear_obs->forced, pm.linear_obs->unforced;
  return {h, pm.linear_obs->offset};
}

template <class Model>
AssimilationResult enkf_step_impl(const Model& model, const Ensemble& ensemble, const Observation& obs,
                                  const FilterOptions& opts) {
  model.validate();
  check_step(ensemble, obs, model.gap);
  const std::size_t count = ensemble.size();
  require(count >= 2, "the ensemble Kalman filter needs at least two members");
  const AffineObservation h = stacked_observation(model);
  const Index first = obs.time - model.gap;

  std::vector<Particle> particles;
  particles.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    particles.push_back(forecast_particle(model, ensemble.particles[j], first, rng));
  }
  const Index n = particles.front().stacked().size();
  const Index forced = particles.front().x.size();
  Matrix states(n, static_cast<Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    states.col(static_cast<Index>(j)) = particles[j].stacked();
  }
  const Vector mean = states.rowwise().mean();
  const Matrix anomalies = (states.colwise() - mean) / std::sqrt(static_cast<double>(count) - 1.0);
  const Matrix obs_anomalies = h.matrix * anomalies;
  Matrix innovation_cov = obs_anomalies * obs_anomalies.transpose() + model.obs_noise.cov();
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());
  const Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance("innovation covariance H P H^T + R is numerically singular");
  }
  // gain = A (HA)^T S^{-1}
  const Matrix gain = anomalies * llt.solve(obs_anomalies).transpose();

  const double uniform = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = make_stream(opts.seed, Stream::kObsPerturbation, static_cast<std::uint64_t>(obs.index), j);
    const Vector perturbed = obs.z + model.obs_noise.sample(rng);
    const Vector s = states.col(static_cast<Index>(j));
    const Vector updated = s + gain * (perturbed - h.matrix * s - h.offset);
    particles[j].x = updated.head(forced);
    if (n > forced) {
      particles[j].y = updated.tail(n - forced);
    }
    particles[j].weight = uniform;
  }
  AssimilationResult result;
  result.weights.assign(count, uniform);
  result.ensemble.particles = std::move(particles);
  result.ensemble.time = obs.time;
  result.estimate = result.ensemble.weighted_mean();
  result.ess = static_cast<double>(count);
  return result;
}

}  // namespace detail

/// Bootstrap filter: prior proposal, likelihood weights.
inline AssimilationResult sir_step(const StateSpaceModel& model, const Ensemble& ensemble, const Observation& obs,
                                   const FilterOptions& opts = {}) {
  return detail::sir_step_impl(model, ensemble, obs, opts);
}

inline AssimilationResult sir_step(const PartialNoiseModel& pm, const Ensemble& ensemble, const Observation& obs,
                                   const FilterOptions& opts = {}) {
  return detail::sir_step_impl(pm, ensemble, obs, opts);
}

/// Stochastic (perturbed-observation) ensemble Kalman filter.
inline AssimilationResult enkf_step(const StateSpaceModel& model, const Ensemble& ensemble, const Observation& obs,
                                    const FilterOptions& opts = {}) {
  return detail::enkf_step_impl(model, ensemble, obs, opts);
}

inline AssimilationResult enkf_step(const PartialNoiseModel& pm, const Ensemble& ensemble, const Observation& obs,
                                    const FilterOptions& opts = {}) {
  return detail::enkf_step_impl(pm, ensemble, obs, opts);
}

}  // namespace ipf

#endif  // IPF_FILTERS_BASELINES_HPP
