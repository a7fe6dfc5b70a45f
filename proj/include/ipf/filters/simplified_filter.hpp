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

#ifndef IPF_FILTERS_SIMPLIFIED_FILTER_HPP
#define IPF_FILTERS_SIMPLIFIED_FILTER_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/partial_noise.hpp"
#include "ipf/core/random.hpp"
#include "ipf/core/state_space.hpp"
#include "ipf/filters/filter_common.hpp"
#include "ipf/filters/full_objective.hpp"
#include "ipf/filters/partial_objective.hpp"

namespace ipf {

/// Free noisy run for r-1 steps, then implicit sampling of the last step only.
inline AssimilationResult assimilate_simplified(const StateSpaceModel& model, const Ensemble& ensemble,
                                                const Observation& obs, const FilterOptions& opts = {}) {
  model.validate();
  model.noise.require_full_rank();
  detail::check_step(ensemble, obs, model.gap);
  const Index m = model.dim;
  const Index first = obs.time - model.gap;
  Vector variance;
  if (opts.scaling == MapScaling::kNoiseStd) {
    require(is_exactly_diagonal(model.noise.cov), "noise-scaled map needs a diagonal noise covariance");
    variance = model.noise.cov.diagonal();
  }
  const Vector scaling = detail::block_scaling(opts, variance, m);
  const double log_det = detail::log_abs_det(scaling);

  std::vector<Particle> particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const Particle& prior = ensemble.particles[j];
    Rng noise_rng = make_stream(opts.seed, Stream::kModelNoise, static_cast<std::uint64_t>(obs.index), j);
    Vector traj_end = prior.x;
    Particle next;
    for (Index k = 0; k + 1 < model.gap; ++k) {
      traj_end = model.drift(traj_end, first + k) + model.noise.sample(noise_rng);
      if (opts.keep_trajectory) {
        next.trajectory.push_back(traj_end);
      }
    }
    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    const Vector xi = standard_normal(m, rng);
    double lw = -std::numeric_limits<double>::infinity();
    ParticleDiagnostics diag{obs.index, static_cast<Index>(j), 0.0, xi.squaredNorm(), 0.0, 0, 0, 0.0, 0.0, m, false};
    if (model.linear_obs) {
      const ClosedForm cf = closed_form_linear_obs(model, traj_end, obs);
      next.x = cf.mu + cf.sqrt_sigma * xi;
      lw = detail::prior_log_weight(prior) - cf.phi + Vector(cf.sqrt_sigma.diagonal()).array().log().sum();
      diag.phi = cf.phi;
    } else {
      auto value = [&](const Vector& X) { return build_F_simplified(model, traj_end, obs, X); };
      auto gradient = [&](const Vector& X) { return grad_F_simplified(model, traj_end, obs, X); };
      const MinimumRecord rec =
          minimize_gradient_descent(value, gradient, model.drift(traj_end, obs.time - 1), opts.descent);
      next.x = traj_end;
      if (rec.status != MinimizeStatus::kFailed) {
        const MapSample sample = solve_lambda(value, gradient, rec, xi, scaling, opts.lambda);
        lw = detail::prior_log_weight(prior) + log_weight_increment(rec.phi, sample, log_det, m);
        next.x = sample.X;
        diag.lambda = sample.lambda;
        diag.newton_iters = sample.iterations;
        diag.residual = sample.residual;
      }
      diag.phi = rec.phi;
      diag.iters = rec.iterations;
    }
    if (opts.keep_trajectory) {
      next.trajectory.push_back(next.x);
    }
    diag.failed = !std::isfinite(lw);
    particles.push_back(std::move(next));
    log_w.push_back(lw);
    diagnostics.push_back(diag);
  }
  return detail::finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

/// Simplified filter for partial noise: noisy forced and deterministic unforced
/// steps up to the data, then implicit sampling of the last forced state.
inline AssimilationResult assimilate_simplified_partial(const PartialNoiseModel& pm, const Ensemble& ensemble,
                                                        const Observation& obs, const FilterOptions& opts = {}) {
  pm.validate();
  detail::check_step(ensemble, obs, pm.gap);
  const Index p = pm.forced_dim;
  const Index first = obs.time - pm.gap;
  const Vector scaling = detail::block_scaling(opts, pm.forced_variance, p);
  const double log_det = detail::log_abs_det(scaling);
  const Vector noise_std = pm.forced_variance.cwiseSqrt();

  std::vector<Particle> particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const Particle& prior = ensemble.particles[j];
    Rng noise_rng = make_stream(opts.seed, Stream::kModelNoise, static_cast<std::uint64_t>(obs.index), j);
    SplitState prev{prior.x, prior.y};
    for (Index k = 0; k + 1 < pm.gap; ++k) {
      SplitVector next = pm.transition(prev.x, prev.y, first + k);
      prev.x = next.forced + noise_std.cwiseProduct(standard_normal(p, noise_rng));
      prev.y = std::move(next.unforced);
    }
    auto value = [&](const Vector& X) { return build_F_partial_dense(pm, prev, obs, X); };
    auto gradient = [&](const Vector& X) { return grad_F_partial_dense(pm, prev, obs, X); };
    const MinimumRecord rec =
        minimize_gradient_descent(value, gradient, pm.f(prev.x, prev.y, obs.time - 1), opts.descent);
    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    const Vector xi = standard_normal(p, rng);
    MapSample sample;
    double lw = -std::numeric_limits<double>::infinity();
    if (rec.status != MinimizeStatus::kFailed) {
      sample = solve_lambda(value, gradient, rec, xi, scaling, opts.lambda);
      lw = detail::prior_log_weight(prior) + log_weight_increment(rec.phi, sample, log_det, p);
    }
    Particle next;
    next.x = sample.X.size() == p ? sample.X : prev.x;
    next.y = pm.g(prev.x, prev.y, obs.time - 1);
    particles.push_back(std::move(next));
    log_w.push_back(lw);
    diagnostics.push_back({obs.index, static_cast<Index>(j), rec.phi, sample.rho, sample.lambda, rec.iterations,
                           sample.iterations, sample.residual, 0.0, p, !std::isfinite(lw)});
  }
  return detail::finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

}  // namespace ipf

#endif  // IPF_FILTERS_SIMPLIFIED_FILTER_HPP
