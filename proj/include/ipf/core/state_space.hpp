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

#ifndef IPF_CORE_STATE_SPACE_HPP
#define IPF_CORE_STATE_SPACE_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/noise.hpp"

namespace ipf {

using DriftFn = std::function<Vector(const Vector& x, Index step)>;
using DriftJacobianFn = std::function<Matrix(const Vector& x, Index step)>;
using ObserveFn = std::function<Vector(const Vector& x)>;
using ObserveJacobianFn = std::function<Matrix(const Vector& x)>;

/// h(x) = matrix * x + offset
struct AffineObservation {
  Matrix matrix;
  Vector offset;
};

/// Discrete model x^{n+1} = drift(x^n, n) + G dW^n observed every `gap` steps
/// through z = observe(x) + V, V ~ N(0, obs_noise).
struct StateSpaceModel {
  Index dim = 0;
  DriftFn drift;
  DriftJacobianFn drift_jacobian;  // optional; central differences otherwise
  NoiseSpec noise;
  ObserveFn observe;
  ObserveJacobianFn observe_jacobian;  // optional
  GaussianCovariance obs_noise;
  Index gap = 1;
  std::optional<AffineObservation> linear_obs;
  std::vector<std::string> warnings;

  [[nodiscard]] Index obs_dim() const { return obs_noise.dim(); }

  [[nodiscard]] Matrix drift_jac(const Vector& x, Index step) const {
    if (drift_jacobian) {
      return drift_jacobian(x, step);
    }
    return numerical_jacobian([&](const Vector& v) { return drift(v, step); }, x);
  }

  [[nodiscard]] Matrix observe_jac(const Vector& x) const {
    if (linear_obs) {
      return linear_obs->matrix;
    }
    if (observe_jacobian) {
      return observe_jacobian(x);
    }
    return numerical_jacobian(observe, x);
  }

  void validate() const {
    require(dim > 0, "state dimension must be positive");
    require(static_cast<bool>(drift), "model drift is not set");
    require(static_cast<bool>(observe), "observation function is not set");
    require(noise.dim() == dim, "noise covariance dimension does not match the state");
    require(gap >= 1, "observation gap must be at least 1");
    if (linear_obs) {
      require(linear_obs->matrix.cols() == dim && linear_obs->matrix.rows() == obs_dim() &&
                  linear_obs->offset.size() == obs_dim(),
              "observation matrix shape does not match");
    }
  }
};

/// Sets observe/observe_jacobian/linear_obs from an affine map.
inline void set_affine_observation(StateSpaceModel& model, Matrix h, Vector offset) {
  require(offset.size() == h.rows(), "observation offset length does not match the matrix");
  model.linear_obs = AffineObservation{std::move(h), std::move(offset)};
  const AffineObservation obs = *model.linear_obs;
  model.observe = [obs](const Vector& x) { return Vector(obs.matrix * x + obs.offset); };
  model.observe_jacobian = [obs](const Vector&) { return obs.matrix; };
}

/// x^{n+1} = A x^n + b + noise, z = H x + noise.
inline StateSpaceModel build_linear_gaussian_model(const Matrix& transition,
                                                   const Matrix& noise_cov,
                                                   const Matrix& obs_matrix,
                                                   const Matrix& obs_cov,
                                                   Index gap = 1,
                                                   const Vector& bias = Vector(),
                                                   double eig_threshold = kDefaultEigenThreshold) {
  require(transition.rows() == transition.cols(), "transition matrix must be square");
  const Index m = transition.rows();
  const Vector shift = bias.size() == 0 ? Vector::Zero(m) : bias;
  require(shift.size() == m, "bias length does not match the state");
  require(obs_matrix.cols() == m, "observation matrix column count does not match the state");
  StateSpaceModel model;
  model.dim = m;
  model.drift = [transition, shift](const Vector& x, Index) { return Vector(transition * x + shift); };
  model.drift_jacobian = [transition](const Vector&, Index) { return transition; };
  model.noise = diagonalize_covariance(noise_cov, eig_threshold);
  model.obs_noise = GaussianCovariance(obs_cov);
  require(obs_matrix.rows() == model.obs_noise.dim(), "observation noise dimension does not match");
  set_affine_observation(model, obs_matrix, Vector::Zero(obs_matrix.rows()));
  model.gap = gap;
  model.validate();
  return model;
}

}  // namespace ipf

#endif  // IPF_CORE_STATE_SPACE_HPP
