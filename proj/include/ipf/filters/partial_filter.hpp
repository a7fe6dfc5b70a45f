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

#ifndef IPF_FILTERS_PARTIAL_FILTER_HPP
#define IPF_FILTERS_PARTIAL_FILTER_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/noise.hpp"
#include "ipf/core/partial_noise.hpp"
#include "ipf/core/random.hpp"
#include "ipf/filters/filter_common.hpp"
#include "ipf/filters/partial_objective.hpp"

namespace ipf {

/// Likelihood-only update for a deterministic model: w <- w exp(-misfit).
/// `observe` maps a particle to its predicted data.
inline AssimilationResult perfect_model_update(const Ensemble& ensemble, const Observation& obs,
                                               const std::function<Vector(const Particle&)>& observe,
                                               const GaussianCovariance& obs_noise, const FilterOptions& opts = {}) {
  require(!ensemble.particles.empty(), "empty ensemble");
  std::vector<Particle> particles = ensemble.particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  for (std::size_t j = 0; j < particles.size(); ++j) {
    const double misfit = 0.5 * obs_noise.mahalanobis(observe(particles[j]) - obs.z);
    log_w.push_back(detail::prior_log_weight(particles[j]) - misfit);
    diagnostics.push_back({obs.index, static_cast<Index>(j), misfit, 0.0, 0.0, 0, 0, 0.0, 0.0, 0, false});
  }
  return detail::finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

/// Deterministic forecast over the gap followed by perfect_model_update.
inline AssimilationResult assimilate_perfect(const PartialNoiseModel& pm, const Ensemble& ensemble,
                                             const Observation& obs, const FilterOptions& opts = {}) {
  detail::check_step(ensemble, obs, pm.gap);
  Ensemble forecast = ensemble;
  const Index first = obs.time - pm.gap;
  for (auto& p : forecast.particles) {
    for (Index k = 0; k < pm.gap; ++k) {
      const SplitVector next = pm.transition(p.x, p.y, first + k);
      p.x = next.forced;
      p.y = next.unforced;
    }
  }
  forecast.time = obs.time;
  return perfect_model_update(
      forecast, obs, [&pm](const Particle& p) { return pm.observe(p.x, p.y); }, pm.obs_noise, opts);
}

namespace detail {

inline Vector partial_initial_guess(const PartialNoiseModel& pm, const SplitState& start, Index first) {
  const Index p = pm.forced_dim;
  Vector X(pm.gap * p);
  Vector x = start.x;
  Vector y = start.y;
  for (Index k = 0; k < pm.gap; ++k) {
    SplitVector next = pm.transition(x, y, first + k);
    X.segment(k * p, p) = next.forced;
    x = std::move(next.forced);
    y = std::move(next.unforced);
  }
  return X;
}

}  // namespace detail

/// One observation cycle of the implicit filter in the forced variables only.
inline AssimilationResult assimilate_partial(const PartialNoiseModel& pm, const Ensemble& ensemble,
                                             const Observation& obs, const FilterOptions& opts = {}) {
  pm.validate();
  if (pm.forced_dim == 0) {
    return assimilate_perfect(pm, ensemble, obs, opts);
  }
  detail::check_step(ensemble, obs, pm.gap);
  const Index p = pm.forced_dim;
  const Index r = pm.gap;
  const Index dim = r * p;
  const Index first = obs.time - r;
  const Vector block = detail::block_scaling(opts, pm.forced_variance, p);
  const Vector scaling = block.size() == 0 ? block : tile(block, r);
  const double log_det = detail::log_abs_det(scaling);

  std::vector<Particle> particles;
  std::vector<double> log_w;
  std::vector<ParticleDiagnostics> diagnostics;
  particles.reserve(ensemble.size());
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const Particle& prior = ensemble.particles[j];
    const SplitState start{prior.x, prior.y};
    auto value = [&](const Vector& X) { return build_F_partial_sparse(pm, start, obs, X); };
    auto gradient = [&](const Vector& X) {
      return opts.gradient == GradientMode::kAdjoint ? grad_F_partial_sparse_adjoint(pm, start, obs, X)
                                                     : grad_F_partial_sparse(pm, start, obs, X);
    };
    const MinimumRecord rec =
        minimize_gradient_descent(value, gradient, detail::partial_initial_guess(pm, start, first), opts.descent);

    Rng rng = make_stream(opts.seed, Stream::kProposal, static_cast<std::uint64_t>(obs.index), j);
    const Vector xi = standard_normal(dim, rng);
    MapSample sample;
    double lw = -std::numeric_limits<double>::infinity();
    if (rec.status != MinimizeStatus::kFailed) {
      sample = solve_lambda(value, gradient, rec, xi, scaling, opts.lambda);
      lw = detail::prior_log_weight(prior) + log_weight_increment(rec.phi, sample, log_det, dim);
    }
    Particle next;
    if (sample.X.size() == dim) {
      const std::vector<Vector> xs = detail::split_blocks(sample.X, p, r);
      const std::vector<Vector> ys = propagate_unforced(pm, xs, prior.x, prior.y, first);
      next.x = xs.back();
      next.y = ys.back();
      if (opts.keep_trajectory) {
        for (std::size_t k = 0; k < xs.size(); ++k) {
          Vector stacked(p + pm.unforced_dim);
          stacked << xs[k], ys[k];
          next.trajectory.push_back(std::move(stacked));
        }
      }
    } else {
      next.x = prior.x;
      next.y = prior.y;
    }
    particles.push_back(std::move(next));
    log_w.push_back(lw);
    diagnostics.push_back({obs.index, static_cast<Index>(j), rec.phi, sample.rho, sample.lambda, rec.iterations,
                           sample.iterations, sample.residual, 0.0, dim, !std::isfinite(lw)});
  }
  return detail::finalize(std::move(particles), log_w, obs.time, obs, opts, std::move(diagnostics));
}

}  // namespace ipf

#endif  // IPF_FILTERS_PARTIAL_FILTER_HPP
