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

#ifndef IPF_FILTERS_MINIMIZE_HPP
#define IPF_FILTERS_MINIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <string_view>

#include "ipf/core/linalg.hpp"

namespace ipf {

struct DescentOptions {
  double tol = 0.10;          // stop when |F_new - F_old| / |F_old| < tol
  double grad_tol = 0.0;      // stop when ||grad F|| <= grad_tol
  int max_iter = 200;
  double armijo = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 80;
};

enum class MinimizeStatus { kConverged, kIterationLimit, kFailed };

inline std::string_view to_string(MinimizeStatus status) {
  switch (status) {
    case MinimizeStatus::kConverged:
      return "converged";
    case MinimizeStatus::kIterationLimit:
      return "iteration_limit";
    case MinimizeStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

/// Result of minimizing one particle's objective.
struct MinimumRecord {
  double phi = 0.0;
  Vector mu;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  MinimizeStatus status = MinimizeStatus::kFailed;
};

/// Steepest descent with Armijo backtracking.
///
/// Every iteration restarts the line search at `initial_step`. A line search
/// that cannot decrease F any more ends the run as converged.
template <class ValueFn, class GradFn>
MinimumRecord minimize_gradient_descent(ValueFn&& value, GradFn&& gradient, Vector x0,
                                        const DescentOptions& opts = {}) {
  MinimumRecord rec;
  rec.mu = std::move(x0);
  double f = value(rec.mu);
  rec.evaluations = 1;
  rec.phi = f;
  if (!std::isfinite(f)) {
    return rec;
  }
  rec.status = MinimizeStatus::kIterationLimit;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector g = gradient(rec.mu);
    if (!g.allFinite()) {
      rec.status = MinimizeStatus::kFailed;
      rec.phi = f;
      return rec;
    }
    const double gg = g.squaredNorm();
    if (gg == 0.0 || std::sqrt(gg) <= opts.grad_tol) {
      rec.status = MinimizeStatus::kConverged;
      break;
    }
    double step = opts.initial_step;
    bool accepted = false;
    Vector trial;
    double f_trial = f;
    for (int b = 0; b < opts.max_backtracks; ++b) {
      trial = rec.mu - step * g;
      f_trial = value(trial);
      ++rec.evaluations;
      if (std::isfinite(f_trial) && f_trial <= f - opts.armijo * step * gg) {
        accepted = true;
        break;
      }
      step *= opts.shrink;
    }
    if (!accepted) {
      rec.status = MinimizeStatus::kConverged;
      break;
    }
    const double change = std::abs(f - f_trial) / std::max(std::abs(f), 1e-300);
    rec.mu = std::move(trial);
    f = f_trial;
    rec.iterations = it + 1;
    if (change < opts.tol) {
      rec.status = MinimizeStatus::kConverged;
      break;
    }
  }
  rec.phi = f;
  rec.converged = rec.status == MinimizeStatus::kConverged;
  return rec;
}

}  // namespace ipf

#endif  // IPF_FILTERS_MINIMIZE_HPP
