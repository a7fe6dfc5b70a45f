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

#ifndef IPF_EXPERIMENTS_CONVERGENCE_HPP
#define IPF_EXPERIMENTS_CONVERGENCE_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/random.hpp"
#include "ipf/experiments/twin.hpp"
#include "ipf/geomag/geomag_model.hpp"
#include "ipf/geomag/gll.hpp"

namespace ipf::experiments {

enum class ConvergenceKind { kSpace, kTime };

inline ConvergenceKind parse_convergence_kind(std::string_view name) {
  if (name == "space") {
    return ConvergenceKind::kSpace;
  }
  if (name == "time") {
    return ConvergenceKind::kTime;
  }
  throw InvalidArgument("convergence kind must be 'space' or 'time'");
}

/// Space sweeps vary the spectral order at the configured time step; time
/// sweeps vary the number of steps over the horizon at the configured order.
struct ConvergenceConfig {
  geomag::GeoConfig geo;
  double horizon = 0.2;
  int reps = 20;
  std::uint64_t seed = 1;
  std::vector<int> resolutions;
  int reference = 0;

  static ConvergenceConfig space_defaults() {
    ConvergenceConfig c;
    c.resolutions = {50, 100, 200};
    c.reference = 400;
    return c;
  }
  static ConvergenceConfig time_defaults() {
    ConvergenceConfig c;
    c.resolutions = {64, 128, 256};  // steps over the horizon
    c.reference = 1024;
    return c;
  }
};

struct ConvergenceRow {
  double resolution = 0.0;  // N, or the time step
  double mean_error = 0.0;
};

namespace detail {

inline std::vector<geomag::NoiseDraw> noise_path(std::uint64_t seed, int rep, Index steps, int modes) {
  std::vector<geomag::NoiseDraw> path;
  path.reserve(static_cast<std::size_t>(steps));
  for (Index n = 0; n < steps; ++n) {
    Rng rng = make_stream(seed, Stream::kModelNoise, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(n));
    path.push_back({standard_normal(modes, rng), standard_normal(modes, rng)});
  }
  return path;
}

/// Sums consecutive groups of `ratio` standard normal increments into one.
inline std::vector<geomag::NoiseDraw> coarsen(const std::vector<geomag::NoiseDraw>& fine, Index ratio) {
  std::vector<geomag::NoiseDraw> out;
  const double scale = 1.0 / std::sqrt(static_cast<double>(ratio));
  for (std::size_t n = 0; n + static_cast<std::size_t>(ratio) <= fine.size(); n += static_cast<std::size_t>(ratio)) {
    geomag::NoiseDraw d{Vector::Zero(fine[n].u.size()), Vector::Zero(fine[n].b.size())};
    for (Index i = 0; i < ratio; ++i) {
      d.u += fine[n + static_cast<std::size_t>(i)].u;
      d.b += fine[n + static_cast<std::size_t>(i)].b;
    }
    d.u *= scale;
    d.b *= scale;
    out.push_back(std::move(d));
  }
  return out;
}

/// Final [u; b] on all GLL nodes, starting from the mean initial fields.
inline Vector run_path(const geomag::GeoModel& geo, const std::vector<geomag::NoiseDraw>& path) {
  geomag::GeoState s = geo.mean_initial_state();
  for (std::size_t n = 0; n < path.size(); ++n) {
    s = geo.step(s, &path[n], static_cast<Index>(n));
  }
  Vector out(2 * (geo.dim() + 2));
  out << geomag::GeoModel::full_u(s.u), geomag::GeoModel::full_b(s.b);
  return out;
}

}  // namespace detail

/// Mean over replications of the Euclidean distance to a fine reference
/// sharing the same Brownian path, evaluated on the reference nodes.
inline std::vector<ConvergenceRow> convergence_study(ConvergenceKind kind, const ConvergenceConfig& cfg) {
  require(cfg.reps >= 1, "need at least one replication");
  require(!cfg.resolutions.empty(), "no resolutions to test");
  const int modes = 2 * cfg.geo.cutoff;
  std::vector<ConvergenceRow> rows;
  if (kind == ConvergenceKind::kSpace) {
    const Index steps = step_count(cfg.horizon, cfg.geo.delta);
    geomag::GeoConfig ref_cfg = cfg.geo;
    ref_cfg.order = cfg.reference;
    const geomag::GeoModel reference(ref_cfg);
    std::vector<geomag::GeoModel> coarse;
    std::vector<Matrix> to_reference;
    for (const int n : cfg.resolutions) {
      geomag::GeoConfig c = cfg.geo;
      c.order = n;
      coarse.emplace_back(c);
      to_reference.push_back(geomag::gll_interpolation_matrix(coarse.back().ops().nodes, reference.ops().nodes));
    }
    std::vector<double> total(cfg.resolutions.size(), 0.0);
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const auto path = detail::noise_path(cfg.seed, rep, steps, modes);
      const Vector ref = detail::run_path(reference, path);
      const Index nr = reference.dim() + 2;
      for (std::size_t i = 0; i < coarse.size(); ++i) {
        const Vector sol = detail::run_path(coarse[i], path);
        const Index nc = coarse[i].dim() + 2;
        Vector mapped(2 * nr);
        mapped << to_reference[i] * sol.head(nc), to_reference[i] * sol.tail(nc);
        total[i] += (mapped - ref).norm();
      }
    }
    for (std::size_t i = 0; i < cfg.resolutions.size(); ++i) {
      rows.push_back({static_cast<double>(cfg.resolutions[i]), total[i] / cfg.reps});
    }
    return rows;
  }

  const Index ref_steps = cfg.reference;
  for (const int n : cfg.resolutions) {
    require(n >= 1 && ref_steps % n == 0, "step counts must divide the reference step count");
  }
  geomag::GeoConfig ref_cfg = cfg.geo;
  ref_cfg.delta = cfg.horizon / static_cast<double>(ref_steps);
  const geomag::GeoModel reference(ref_cfg);
  std::vector<geomag::GeoModel> coarse;
  for (const int n : cfg.resolutions) {
    geomag::GeoConfig c = cfg.geo;
    c.delta = cfg.horizon / static_cast<double>(n);
    coarse.emplace_back(c);
  }
  std::vector<double> total(cfg.resolutions.size(), 0.0);
  for (int rep = 0; rep < cfg.reps; ++rep) {
    const auto path = detail::noise_path(cfg.seed, rep, ref_steps, modes);
    const Vector ref = detail::run_path(reference, path);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      const auto coarse_path = detail::coarsen(path, ref_steps / cfg.resolutions[i]);
      total[i] += (detail::run_path(coarse[i], coarse_path) - ref).norm();
    }
  }
  for (std::size_t i = 0; i < cfg.resolutions.size(); ++i) {
    rows.push_back({cfg.horizon / cfg.resolutions[i], total[i] / cfg.reps});
  }
  return rows;
}

/// Least-squares slope of log(error) against log(resolution).
inline double loglog_slope(const std::vector<ConvergenceRow>& rows) {
  require(rows.size() >= 2, "slope needs at least two rows");
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& r : rows) {
    const double x = std::log(r.resolution);
    const double y = std::log(r.mean_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace ipf::experiments

#endif  // IPF_EXPERIMENTS_CONVERGENCE_HPP
