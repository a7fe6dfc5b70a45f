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

#ifndef IPF_EXPERIMENTS_TWIN_HPP
#define IPF_EXPERIMENTS_TWIN_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/random.hpp"
#include "ipf/filters/baselines.hpp"
#include "ipf/filters/filter_common.hpp"
#include "ipf/filters/partial_filter.hpp"
#include "ipf/filters/simplified_filter.hpp"
#include "ipf/geomag/geomag_model.hpp"

namespace ipf::experiments {

enum class FilterKind { kImplicit, kSimplified, kSir, kEnkf, kPerfect };

inline std::string_view filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::kImplicit:
      return "implicit";
    case FilterKind::kSimplified:
      return "simplified";
    case FilterKind::kSir:
      return "sir";
    case FilterKind::kEnkf:
      return "enkf";
    case FilterKind::kPerfect:
      return "perfect";
  }
  return "unknown";
}

inline FilterKind parse_filter(std::string_view name) {
  if (name == "implicit" || name == "implicit_partial") {
    return FilterKind::kImplicit;
  }
  if (name == "simplified") {
    return FilterKind::kSimplified;
  }
  if (name == "sir") {
    return FilterKind::kSir;
  }
  if (name == "enkf") {
    return FilterKind::kEnkf;
  }
  if (name == "perfect") {
    return FilterKind::kPerfect;
  }
  throw InvalidArgument("unknown filter '" + std::string(name) + "'");
}

struct TwinConfig {
  geomag::GeoConfig geo;
  double horizon = 0.2;  // T
  Index gap = 10;
  Index obs_k = 200;
  double obs_lo = 0.0;
  double obs_hi = 1.0;
  double obs_noise = 0.001;
  FilterKind filter = FilterKind::kImplicit;
  Index particles = 10;
  std::uint64_t seed = 1;
  FilterOptions filter_options;  // seed is replaced by the run seed
  bool start_from_truth = false;  // filter ensemble starts at the true initial state
};

struct TwinResult {
  std::uint64_t seed = 0;
  FilterKind filter = FilterKind::kImplicit;
  Index particles = 0;
  Index gap = 0;
  Index obs_k = 0;
  double e_u = 0.0;
  double e_b = 0.0;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
  // Filter health over the run.
  Index resamples = 0;
  Index failed_particles = 0;
  Index accepted_samples = 0;
  double max_residual = 0.0;
  double mean_ess = 0.0;
  double mean_descent_iters = 0.0;
  double mean_newton_iters = 0.0;
  // Interior fields at the final time.
  geomag::GeoState truth_final;
  geomag::GeoState estimate_final;
};

/// ||truth - estimate|| / ||truth||
inline double relative_error(const Vector& truth, const Vector& estimate) {
  const double norm = truth.norm();
  require(norm > 0.0, "relative error against a zero field");
  return (truth - estimate).norm() / norm;
}

inline Index step_count(double horizon, double delta) {
  const double ratio = horizon / delta;
  const double rounded = std::round(ratio);
  require(rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * rounded,
          "horizon must be a whole number of time steps");
  return static_cast<Index>(rounded);
}

/// Truth run, synthetic data, and one filter run on a shared discretization.
inline TwinResult twin_experiment(const TwinConfig& cfg, std::shared_ptr<const geomag::GeoModel> geo = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  if (!geo) {
    geo = std::make_shared<const geomag::GeoModel>(cfg.geo);
  }
  require(cfg.particles >= 1, "need at least one particle");
  require(cfg.gap >= 1, "observation gap must be at least 1");
  require(cfg.obs_noise > 0.0, "observation noise must be positive");
  TwinResult result;
  result.seed = cfg.seed;
  result.filter = cfg.filter;
  result.particles = cfg.particles;
  result.gap = cfg.gap;
  result.obs_k = cfg.obs_k;

  const Index steps = step_count(cfg.horizon, geo->config().delta);
  const geomag::GeoObservation obs_op = geo->observation_operator(cfg.obs_k, cfg.obs_lo, cfg.obs_hi);

  // Truth and data.
  Rng truth_rng = make_stream(cfg.seed, Stream::kTruth);
  const geomag::GeoState truth0 = geo->initial_state(true, truth_rng);
  geomag::GeoState truth = truth0;
  std::vector<Observation> data;
  for (Index n = 0; n < steps; ++n) {
    const geomag::NoiseDraw draw = geo->draw_noise(truth_rng);
    truth = geo->step(truth, &draw, n);
    if ((n + 1) % cfg.gap == 0) {
      Rng obs_rng = make_stream(cfg.seed, Stream::kObservation, static_cast<std::uint64_t>(data.size() + 1));
      Vector z = obs_op.interior * truth.b + obs_op.offset + cfg.obs_noise * standard_normal(cfg.obs_k, obs_rng);
      data.push_back(make_observation(std::move(z), static_cast<Index>(data.size() + 1), cfg.gap));
    }
  }

  FilterOptions opts = cfg.filter_options;
  opts.seed = mix64(cfg.seed ^ 0x5bd1e995ULL);
  const bool full_state = cfg.filter == FilterKind::kSir || cfg.filter == FilterKind::kEnkf;

  try {
    // Independent initial ensemble.
    std::vector<Vector> xs;
    std::vector<Vector> ys;
    for (Index j = 0; j < cfg.particles; ++j) {
      Rng init_rng = make_stream(cfg.seed, Stream::kInitial, 0, static_cast<std::uint64_t>(j));
      const geomag::GeoState s = cfg.start_from_truth ? truth0 : geo->initial_state(true, init_rng);
      if (full_state) {
        xs.push_back(geo->pack(s));
      } else {
        SplitVector split = geo->to_split(s);
        xs.push_back(std::move(split.forced));
        ys.push_back(std::move(split.unforced));
      }
    }
    Ensemble ensemble = make_ensemble(xs, ys);

    Vector estimate;
    double ess_total = 0.0;
    double descent_total = 0.0;
    double newton_total = 0.0;
    Index diag_count = 0;
    auto absorb = [&](AssimilationResult&& r) {
      ensemble = std::move(r.ensemble);
      estimate = std::move(r.estimate);
      ess_total += r.ess;
      result.resamples += r.resampled ? 1 : 0;
      result.failed_particles += r.failed;
      for (const auto& d : r.diagnostics) {
        if (!d.failed && d.dim > 0) {
          ++result.accepted_samples;
          result.max_residual = std::max(result.max_residual, std::abs(d.residual));
        }
        descent_total += d.iters;
        newton_total += d.newton_iters;
        ++diag_count;
      }
    };

    if (full_state) {
      const StateSpaceModel model = geomag::state_space_model(geo, obs_op, cfg.obs_noise, cfg.gap);
      for (const auto& obs : data) {
        absorb(cfg.filter == FilterKind::kSir ? sir_step(model, ensemble, obs, opts)
                                              : enkf_step(model, ensemble, obs, opts));
      }
    } else {
      const PartialNoiseModel pm = geomag::partial_model(geo, obs_op, cfg.obs_noise, cfg.gap);
      for (const auto& obs : data) {
        if (cfg.filter == FilterKind::kPerfect || pm.forced_dim == 0) {
          absorb(assimilate_perfect(pm, ensemble, obs, opts));
        } else if (cfg.filter == FilterKind::kSimplified) {
          absorb(assimilate_simplified_partial(pm, ensemble, obs, opts));
        } else {
          absorb(assimilate_partial(pm, ensemble, obs, opts));
        }
      }
    }

    // Deterministic forecast of the weighted ensemble past the last data time.
    const Index last = data.empty() ? 0 : data.back().time;
    if (data.empty() || last < steps) {
      Vector mean;
      for (const auto& p : ensemble.particles) {
        geomag::GeoState s = full_state ? geo->unpack(p.x) : geo->from_split(p.x, p.y);
        for (Index n = last; n < steps; ++n) {
          s = geo->step(s, nullptr, n);
        }
        const Vector packed = geo->pack(s);
        mean = mean.size() == 0 ? Vector(p.weight * packed) : Vector(mean + p.weight * packed);
      }
      estimate = mean;
    } else if (!full_state) {
      const Index p = geo->forced_dim();
      estimate = geo->pack(geo->from_split(estimate.head(p), estimate.tail(estimate.size() - p)));
    }
    const geomag::GeoState est = geo->unpack(estimate);
    result.truth_final = truth;
    result.estimate_final = est;
    result.e_u = relative_error(geomag::GeoModel::full_u(truth.u), geomag::GeoModel::full_u(est.u));
    result.e_b = relative_error(geomag::GeoModel::full_b(truth.b), geomag::GeoModel::full_b(est.b));
    result.ok = std::isfinite(result.e_u) && std::isfinite(result.e_b);
    if (!result.ok) {
      result.error = "non-finite error norm";
    }
    result.mean_ess = data.empty() ? 0.0 : ess_total / static_cast<double>(data.size());
    result.mean_descent_iters = diag_count == 0 ? 0.0 : descent_total / static_cast<double>(diag_count);
    result.mean_newton_iters = diag_count == 0 ? 0.0 : newton_total / static_cast<double>(diag_count);
  } catch (const Error& e) {
    result.ok = false;
    result.error = e.what();
  }
  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace ipf::experiments

#endif  // IPF_EXPERIMENTS_TWIN_HPP
