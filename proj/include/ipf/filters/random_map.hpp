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

#ifndef IPF_FILTERS_RANDOM_MAP_HPP
#define IPF_FILTERS_RANDOM_MAP_HPP

#include <cmath>
#include <limits>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/filters/minimize.hpp"

namespace ipf {

struct LambdaOptions {
  double tol = 1e-3;  // accepted |F(X) - phi - rho/2|
  int max_iter = 60;
  double slope_step = 1e-6;
};

/// One draw of the random map X = mu + lambda * L * eta.
struct MapSample {
  Vector xi;
  double rho = 0.0;
  Vector eta;
  double lambda = 0.0;
  double dlambda_drho = 0.0;
  Vector X;
  double residual = 0.0;
  int iterations = 0;
  bool ok = false;
};

/// Solves F(mu + lambda * L * eta) - phi = rho / 2 for lambda > 0.
///
/// `scaling` holds the diagonal of L (empty means L = I). Newton steps use a
/// central-difference slope and are kept inside a bracket around the root;
/// from lambda = 0, where the slope vanishes at an exact minimizer, the first
/// iterate is the root of the local quadratic model.
template <class ValueFn, class GradFn>
MapSample solve_lambda(ValueFn&& value, GradFn&& gradient, const MinimumRecord& rec, const Vector& xi,
                       const Vector& scaling = Vector(), const LambdaOptions& opts = {}) {
  const Index n = xi.size();
  require(rec.mu.size() == n, "reference draw and minimizer differ in dimension");
  require(scaling.size() == 0 || scaling.size() == n, "map scaling has the wrong length");

  MapSample s;
  s.xi = xi;
  s.rho = xi.squaredNorm();
  if (s.rho == 0.0) {
    s.eta = Vector::Zero(n);
    s.X = rec.mu;
    s.residual = value(rec.mu) - rec.phi;
    s.dlambda_drho = std::numeric_limits<double>::infinity();
    s.ok = std::abs(s.residual) <= opts.tol;
    return s;
  }
  s.eta = xi / std::sqrt(s.rho);
  const Vector dir = scaling.size() == 0 ? s.eta : Vector(scaling.cwiseProduct(s.eta));
  auto target = [&](double lam) { return value(rec.mu + lam * dir) - rec.phi - 0.5 * s.rho; };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const double tight = 1e-14 * std::max(1.0, std::abs(rec.phi) + s.rho);

  double lam = 0.0;
  double g = target(0.0);
  double lo = 0.0;
  double hi = kInf;
  double next = std::numeric_limits<double>::quiet_NaN();
  if (g < 0.0) {
    const double h = opts.slope_step;
    const double gp = target(h);
    const double gm = target(-h);
    const double slope = (gp - gm) / (2.0 * h);
    const double curvature = (gp - 2.0 * g + gm) / (h * h);
    if (curvature > 0.0 && std::isfinite(curvature)) {
      next = (-slope + std::sqrt(slope * slope - 2.0 * curvature * g)) / curvature;
    } else if (slope > 0.0) {
      next = lam - g / slope;
    }
    for (int it = 0; it < opts.max_iter; ++it) {
      if (!(std::isfinite(next) && next > lo && next < hi)) {
        next = std::isinf(hi) ? std::max(2.0 * lo, 1.0) : 0.5 * (lo + hi);
      }
      const double g_next = target(next);
      ++s.iterations;
      if (!std::isfinite(g_next)) {
        hi = next;
        next = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double previous = lam;
      lam = next;
      g = g_next;
      if (g < 0.0) {
        lo = lam;
      } else {
        hi = lam;
      }
      if (std::abs(g) <= tight || std::abs(lam - previous) <= 2.0 * kEps * std::abs(lam) ||
          (std::isfinite(hi) && hi - lo <= 2.0 * kEps * hi)) {
        break;
      }
      const double step = opts.slope_step * (1.0 + std::abs(lam));
      const double slope = (target(lam + step) - target(lam - step)) / (2.0 * step);
      next = slope > 0.0 ? lam - g / slope : std::numeric_limits<double>::quiet_NaN();
    }
  }

  s.lambda = lam;
  s.residual = g;
  s.X = rec.mu + lam * dir;
  const double slope = gradient(s.X).dot(dir);
  s.dlambda_drho = 1.0 / (2.0 * slope);
  s.ok = std::isfinite(g) && std::abs(g) <= opts.tol && lam > 0.0 && slope > 0.0 && std::isfinite(slope);
  return s;
}

/// log of exp(-phi) |det L| rho^{1-dim/2} |lambda^{dim-1} dlambda/drho|; -inf for a failed sample.
inline double log_weight_increment(double phi, const MapSample& s, double log_abs_det_scaling, Index dim) {
  if (!s.ok) {
    return -std::numeric_limits<double>::infinity();
  }
  const double d = static_cast<double>(dim);
  const double lw = -phi + log_abs_det_scaling + (1.0 - 0.5 * d) * std::log(s.rho) +
                    (d - 1.0) * std::log(std::abs(s.lambda)) + std::log(std::abs(s.dlambda_drho));
  return std::isfinite(lw) ? lw : -std::numeric_limits<double>::infinity();
}

/// Unnormalized weight prev_w * exp(log_weight_increment(...)).
inline double particle_weight(double prev_w, double phi, const MapSample& s, double log_abs_det_scaling, Index dim) {
  return prev_w * std::exp(log_weight_increment(phi, s, log_abs_det_scaling, dim));
}

}  // namespace ipf

#endif  // IPF_FILTERS_RANDOM_MAP_HPP
