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

#ifndef IPF_FILTERS_IMPLICIT_FILTER_HPP
#define IPF_FILTERS_IMPLICIT_FILTER_HPP

#include <cstdint>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/random.hpp"
#include "ipf/core/state_space.hpp"
#include "ipf/filters/filter_common.hpp"
#include "ipf/filters/full_objective.hpp"

namespace ipf {

namespace detail {

/// Noise-free run over the gap; the last block is the closed-form minimizer
/// when the observation operator is affine.
inline Vector full_noise_initial_guess(const StateSpaceModel& model, const Vector& start, const Observation& obs) {
  const Index m = model.dim;
  const Index r = model.gap;
  const Index first = obs.time - r;
  Vector X(r * m);
  Vector prev = start;
  for (Index k = 0; k + 1 < r; ++k) {
    prev = model.drift(prev, first + k);
    X.segment(k * m, m) = prev;
  }
  X.segment((r - 1) * m, m) =
      model.linear_obs ? closed_form_linear_obs(model, prev, obs).mu : model.drift(prev, obs.time - 1);
  return X;
}

inline Vector full_noise_scaling(const StateSpaceModel& model, const FilterOptions& opts) {
  Vector variance;
  if (opts.scaling == MapScaling::kNoiseStd) {
    require(is_exactly_diagonal(model.noise.cov), "noise-scaled map needs a diagonal noise covariance");
    variance = model.noise.cov.diagonal();
  }
  const Vector block = block_scaling(opts, variance, model.dim);
  return block.size() == 0 ? block : tile(block, model.gap);
}

}  // namespace detail

/// One observation cycle of the implicit particle filter for full-rank model noise.
inline AssimilationResult assimilate_full_noise(const StateSpaceModel& model, const Ensemble& ensemble,
                                                const Observation& obs, const FilterOptions& opts = {}) {
  model.validate();
  model.noise.require_full_rank();
  detail::check_step(ensemble, obs, model.gap);
  const Index m = model.dim;
  const Index r = model.gap;
  const Index dim = r * m;
  const Vector scaling = detail::full_noise_scaling(model, opts);
  const double log_det = detail::log_abs_det(scaling);

  std::vector<Particle> particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  particles.reserve(ensemble.size());
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const Particle& prior = ensemble.particles[j];
    auto value = [&](const Vector& X) { return build_F_full(model, prior.x, obs, X); };
    auto gradient = [&](const Vector& X) { return grad_F_full(model, prior.x, obs, X); };
    const MinimumRecord rec =
        minimize_gradient_descent(value, gradient, detail::full_noise_initial_guess(model, prior.x, obs), opts.descent);

    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    const Vector xi = standard_normal(dim, rng);
    MapSample sample;
    double lw = -std::numeric_limits<double>::infinity();
    if (rec.status != MinimizeStatus::kFailed) {
      sample = solve_lambda(value, gradient, rec, xi, scaling, opts.lambda);
      lw = detail::prior_log_weight(prior) + log_weight_increment(rec.phi, sample, log_det, dim);
    }
    Particle next;
    next.x = sample.X.size() == dim ? Vector(sample.X.tail(m)) : prior.x;
    if (opts.keep_trajectory && sample.X.size() == dim) {
      for (Index k = 0; k < r; ++k) {
        next.trajectory.push_back(sample.X.segment(k * m, m));
      }
    }
    particles.push_back(std::move(next));
    log_w.push_back(lw);
    diagnostics.push_back({obs.index, static_cast<Index>(j), rec.phi, sample.rho, sample.lambda, rec.iterations,
                           sample.iterations, sample.residual, 0.0, dim, !std::isfinite(lw)});
  }
  return detail::finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

}  // namespace ipf

#endif  // IPF_FILTERS_IMPLICIT_FILTER_HPP
