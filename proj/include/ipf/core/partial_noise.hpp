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

#ifndef IPF_CORE_PARTIAL_NOISE_HPP
#define IPF_CORE_PARTIAL_NOISE_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/noise.hpp"
#include "ipf/core/state_space.hpp"

namespace ipf {

/// Pair of forced and unforced components.
struct SplitVector {
  Vector forced;
  Vector unforced;
};

using SplitTransitionFn = std::function<SplitVector(const Vector& x, const Vector& y, Index step)>;
using SplitJacobianFn = std::function<Matrix(const Vector& x, const Vector& y, Index step)>;
/// (Jfx^T a + Jgx^T b, Jfy^T a + Jgy^T b) for cotangents a (forced) and b (unforced).
using SplitVjpFn =
    std::function<SplitVector(const Vector& x, const Vector& y, Index step, const Vector& a, const Vector& b)>;
using SplitObserveFn = std::function<Vector(const Vector& x, const Vector& y)>;
using SplitObserveJacobianFn = std::function<Matrix(const Vector& x, const Vector& y)>;

struct SplitAffineObservation {
  Matrix forced;
  Matrix unforced;
  Vector offset;
};

/// x^{n+1} = f(x^n, y^n) + noise with diagonal covariance `forced_variance`,
/// y^{n+1} = g(x^n, y^n), z = h(x, y) + V.
struct PartialNoiseModel {
  Index forced_dim = 0;
  Index unforced_dim = 0;
  SplitTransitionFn transition;
  SplitJacobianFn jac_fx;  // the four Jacobians are optional
  SplitJacobianFn jac_fy;
  SplitJacobianFn jac_gx;
  SplitJacobianFn jac_gy;
  SplitVjpFn transition_vjp;  // optional
  Vector forced_variance;
  SplitObserveFn observe;
  SplitObserveJacobianFn observe_jac_x;  // optional
  SplitObserveJacobianFn observe_jac_y;  // optional
  GaussianCovariance obs_noise;
  Index gap = 1;
  std::optional<SplitAffineObservation> linear_obs;
  // Set when the split came from an orthogonal change of variables s = F x + N y.
  Matrix forced_basis;
  Matrix unforced_basis;
  std::vector<std::string> warnings;

  [[nodiscard]] Index obs_dim() const { return obs_noise.dim(); }

  [[nodiscard]] Vector f(const Vector& x, const Vector& y, Index step) const {
    return transition(x, y, step).forced;
  }
  [[nodiscard]] Vector g(const Vector& x, const Vector& y, Index step) const {
    return transition(x, y, step).unforced;
  }

  [[nodiscard]] Matrix fx(const Vector& x, const Vector& y, Index step) const {
    if (jac_fx) {
      return jac_fx(x, y, step);
    }
    return numerical_jacobian([&](const Vector& v) { return f(v, y, step); }, x);
  }
  [[nodiscard]] Matrix fy(const Vector& x, const Vector& y, Index step) const {
    if (jac_fy) {
      return jac_fy(x, y, step);
    }
    return numerical_jacobian([&](const Vector& v) { return f(x, v, step); }, y);
  }
  [[nodiscard]] Matrix gx(const Vector& x, const Vector& y, Index step) const {
    if (jac_gx) {
      return jac_gx(x, y, step);
    }
    return numerical_jacobian([&](const Vector& v) { return g(v, y, step); }, x);
  }
  [[nodiscard]] Matrix gy(const Vector& x, const Vector& y, Index step) const {
    if (jac_gy) {
      return jac_gy(x, y, step);
    }
    return numerical_jacobian([&](const Vector& v) { return g(x, v, step); }, y);
  }

  [[nodiscard]] SplitVector vjp(const Vector& x, const Vector& y, Index step, const Vector& a, const Vector& b) const {
    if (transition_vjp) {
      return transition_vjp(x, y, step, a, b);
    }
    return {fx(x, y, step).transpose() * a + gx(x, y, step).transpose() * b,
            fy(x, y, step).transpose() * a + gy(x, y, step).transpose() * b};
  }

  [[nodiscard]] Matrix hx(const Vector& x, const Vector& y) const {
    if (linear_obs) {
      return linear_obs->forced;
    }
    if (observe_jac_x) {
      return observe_jac_x(x, y);
    }
    return numerical_jacobian([&](const Vector& v) { return observe(v, y); }, x);
  }
  [[nodiscard]] Matrix hy(const Vector& x, const Vector& y) const {
    if (linear_obs) {
      return linear_obs->unforced;
    }
    if (observe_jac_y) {
      return observe_jac_y(x, y);
    }
    return numerical_jacobian([&](const Vector& v) { return observe(x, v); }, y);
  }

  [[nodiscard]] bool has_basis() const { return forced_basis.size() > 0 || unforced_basis.size() > 0; }

  /// s = F x + N y; only for splits from an orthogonal change of variables.
  [[nodiscard]] Vector to_state(const Vector& x, const Vector& y) const {
    require(has_basis(), "model has no change-of-variables basis");
    return forced_basis * x + unforced_basis * y;
  }
  [[nodiscard]] SplitVector from_state(const Vector& s) const {
    require(has_basis(), "model has no change-of-variables basis");
    return {forced_basis.transpose() * s, unforced_basis.transpose() * s};
  }

  void validate() const {
    require(forced_dim >= 0 && unforced_dim >= 0, "negative dimension");
    require(static_cast<bool>(transition), "transition is not set");
    require(static_cast<bool>(observe), "observation function is not set");
    require(forced_variance.size() == forced_dim, "forced variance length does not match");
    require(forced_dim == 0 || forced_variance.minCoeff() > 0.0, "forced variances must be positive");
    require(gap >= 1, "observation gap must be at least 1");
  }
};

/// Rotates a rank-deficient model into forced (noise range) and unforced
/// (noise null space) coordinates.
inline PartialNoiseModel split_to_partial(const StateSpaceModel& model) {
  model.validate();
  if (model.noise.full_rank()) {
    throw InvalidArgument("noise covariance has full rank: no unforced subspace, use the full-noise filter");
  }
  const Matrix vf = model.noise.eigvecs;
  const Matrix vn = model.noise.null_basis;
  PartialNoiseModel pm;
  pm.forced_dim = vf.cols();
  pm.unforced_dim = vn.cols();
  pm.forced_basis = vf;
  pm.unforced_basis = vn;
  pm.forced_variance = model.noise.eigvals;
  pm.obs_noise = model.obs_noise;
  pm.gap = model.gap;
  pm.warnings = model.warnings;

  const StateSpaceModel base = model;
  pm.transition = [base, vf, vn](const Vector& x, const Vector& y, Index n) {
    const Vector next = base.drift(vf * x + vn * y, n);
    return SplitVector{vf.transpose() * next, vn.transpose() * next};
  };
  pm.jac_fx = [base, vf, vn](const Vector& x, const Vector& y, Index n) {
    return Matrix(vf.transpose() * base.drift_jac(vf * x + vn * y, n) * vf);
  };
  pm.jac_fy = [base, vf, vn](const Vector& x, const Vector& y, Index n) {
    return Matrix(vf.transpose() * base.drift_jac(vf * x + vn * y, n) * vn);
  };
  pm.jac_gx = [base, vf, vn](const Vector& x, const Vector& y, Index n) {
    return Matrix(vn.transpose() * base.drift_jac(vf * x + vn * y, n) * vf);
  };
  pm.jac_gy = [base, vf, vn](const Vector& x, const Vector& y, Index n) {
    return Matrix(vn.transpose() * base.drift_jac(vf * x + vn * y, n) * vn);
  };
  pm.transition_vjp = [base, vf, vn](const Vector& x, const Vector& y, Index n, const Vector& a, const Vector& b) {
    const Vector back = base.drift_jac(vf * x + vn * y, n).transpose() * (vf * a + vn * b);
    return SplitVector{vf.transpose() * back, vn.transpose() * back};
  };
  pm.observe = [base, vf, vn](const Vector& x, const Vector& y) { return base.observe(vf * x + vn * y); };
  pm.observe_jac_x = [base, vf, vn](const Vector& x, const Vector& y) {
    return Matrix(base.observe_jac(vf * x + vn * y) * vf);
  };
  pm.observe_jac_y = [base, vf, vn](const Vector& x, const Vector& y) {
    return Matrix(base.observe_jac(vf * x + vn * y) * vn);
  };
  if (model.linear_obs) {
    pm.linear_obs = SplitAffineObservation{model.linear_obs->matrix * vf, model.linear_obs->matrix * vn,
                                           model.linear_obs->offset};
  }
  pm.validate();
  return pm;
}

}  // namespace ipf

#endif  // IPF_CORE_PARTIAL_NOISE_HPP
