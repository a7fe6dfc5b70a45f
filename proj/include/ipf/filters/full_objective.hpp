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

#ifndef IPF_FILTERS_FULL_OBJECTIVE_HPP
#define IPF_FILTERS_FULL_OBJECTIVE_HPP

#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/state_space.hpp"

namespace ipf {

namespace detail {

/// F over `steps` transitions starting at model step `first`, plus the data term.
inline double full_objective(const StateSpaceModel& model, const Vector& start, Index first, Index steps,
                             const Observation& obs, const Vector& X) {
  model.noise.require_full_rank();
  const Index m = model.dim;
  require(X.size() == steps * m, "trajectory has the wrong length");
  require(start.size() == m, "start state has the wrong length");
  double f = 0.0;
  Vector prev = start;
  for (Index k = 0; k < steps; ++k) {
    const Vector xk = X.segment(k * m, m);
    f += 0.5 * model.noise.mahalanobis(xk - model.drift(prev, first + k));
    prev = xk;
  }
  f += 0.5 * model.obs_noise.mahalanobis(model.observe(prev) - obs.z);
  return f;
}

inline Vector full_gradient(const StateSpaceModel& model, const Vector& start, Index first, Index steps,
                            const Observation& obs, const Vector& X) {
  model.noise.require_full_rank();
  const Index m = model.dim;
  require(X.size() == steps * m, "trajectory has the wrong length");
  std::vector<Vector> scaled(static_cast<std::size_t>(steps));  // cov^{-1} residual of step k+1
  Vector prev = start;
  for (Index k = 0; k < steps; ++k) {
    const Vector xk = X.segment(k * m, m);
    scaled[static_cast<std::size_t>(k)] = model.noise.precision_times(xk - model.drift(prev, first + k));
    prev = xk;
  }
  Vector grad(steps * m);
  for (Index k = 0; k < steps; ++k) {
    Vector block = scaled[static_cast<std::size_t>(k)];
    const Vector xk = X.segment(k * m, m);
    if (k + 1 < steps) {
      block -= model.drift_jac(xk, first + k + 1).transpose() * scaled[static_cast<std::size_t>(k + 1)];
    } else {
      block += model.observe_jac(xk).transpose() * model.obs_noise.solve(Vector(model.observe(xk) - obs.z));
    }
    grad.segment(k * m, m) = block;
  }
  return grad;
}

}  // namespace detail

/// Negative log of the trajectory posterior for one particle (normalization dropped).
/// `X` stacks the r states that follow `start`.
inline double build_F_full(const StateSpaceModel& model, const Vector& start, const Observation& obs,
                           const Vector& X) {
  return detail::full_objective(model, start, obs.time - model.gap, model.gap, obs, X);
}

inline Vector grad_F_full(const StateSpaceModel& model, const Vector& start, const Observation& obs,
                          const Vector& X) {
  return detail::full_gradient(model, start, obs.time - model.gap, model.gap, obs, X);
}

/// F over the last transition only; `traj_end` is the state one step before the data.
inline double build_F_simplified(const StateSpaceModel& model, const Vector& traj_end, const Observation& obs,
                                 const Vector& X_final) {
  return detail::full_objective(model, traj_end, obs.time - 1, 1, obs, X_final);
}

inline Vector grad_F_simplified(const StateSpaceModel& model, const Vector& traj_end, const Observation& obs,
                                const Vector& X_final) {
  return detail::full_gradient(model, traj_end, obs.time - 1, 1, obs, X_final);
}

/// Exact minimum of the one-step objective for affine observations.
struct ClosedForm {
  double phi = 0.0;
  Vector mu;
  Matrix sigma;
  Matrix sqrt_sigma;  // lower triangular
};

inline ClosedForm closed_form_linear_obs(const StateSpaceModel& model, const Vector& traj_end, const Observation& obs) {
  require(model.linear_obs.has_value(), "closed form needs an affine observation operator");
  const Matrix& h = model.linear_obs->matrix;
  const Matrix& q = model.noise.cov;
  const Vector prior = model.drift(traj_end, obs.time - 1);
  const Vector innovation = obs.z - model.linear_obs->offset - h * prior;
  const Matrix qht = q * h.transpose();
  const Matrix k = h * qht + model.obs_noise.cov();
  const Eigen::LLT<Matrix> k_llt(0.5 * (k + k.transpose()));
  if (k_llt.info() != Eigen::Success) {
    throw SingularCovariance("combined covariance H Q H^T + R is singular");
  }
  ClosedForm cf;
  cf.phi = 0.5 * innovation.dot(k_llt.solve(innovation));
  const Matrix gain = k_llt.solve(qht.transpose()).transpose();
  cf.mu = prior + gain * innovation;
  cf.sigma = q - gain * qht.transpose();
  cf.sigma = 0.5 * (cf.sigma + cf.sigma.transpose());
  const Eigen::LLT<Matrix> s_llt(cf.sigma);
  if (s_llt.info() != Eigen::Success) {
    throw SingularCovariance("posterior covariance is not positive definite");
  }
  cf.sqrt_sigma = s_llt.matrixL();
  return cf;
}

}  // namespace ipf

#endif  // IPF_FILTERS_FULL_OBJECTIVE_HPP
