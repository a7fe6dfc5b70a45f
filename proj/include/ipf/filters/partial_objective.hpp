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

#ifndef IPF_FILTERS_PARTIAL_OBJECTIVE_HPP
#define IPF_FILTERS_PARTIAL_OBJECTIVE_HPP

#include <vector>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/partial_noise.hpp"

namespace ipf {

/// Forced and unforced state of one particle.
struct SplitState {
  Vector x;
  Vector y;
};

/// y^{k+1} = g(x^k, y^k), with x^0 = x0 and x^k = x_traj[k-1] for k >= 1.
/// Entry k of the result is y^{k+1}; the last forced state is not needed.
inline std::vector<Vector> propagate_unforced(const PartialNoiseModel& pm, const std::vector<Vector>& x_traj,
                                              const Vector& x0, const Vector& y0, Index first_step = 0) {
  std::vector<Vector> out;
  out.reserve(x_traj.size());
  Vector y = y0;
  for (std::size_t k = 0; k < x_traj.size(); ++k) {
    const Vector& xk = k == 0 ? x0 : x_traj[k - 1];
    y = pm.g(xk, y, first_step + static_cast<Index>(k));
    if (!y.allFinite()) {
      throw NumericalError("unforced propagation produced non-finite values at step " +
                           std::to_string(first_step + static_cast<Index>(k)));
    }
    out.push_back(y);
  }
  return out;
}

namespace detail {

inline std::vector<Vector> split_blocks(const Vector& X, Index block, Index count) {
  require(X.size() == block * count, "trajectory has the wrong length");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    out.emplace_back(X.segment(k * block, block));
  }
  return out;
}

/// States along a candidate forced trajectory: xs[k], ys[k] for k = 0..r and
/// the forced residuals e[k] = X^{k+1} - f(X^k, Y^k).
struct PartialSweep {
  std::vector<Vector> xs;
  std::vector<Vector> ys;
  std::vector<Vector> residuals;
  Vector misfit;
  double value = 0.0;
};

inline PartialSweep partial_sweep(const PartialNoiseModel& pm, const SplitState& start, const Observation& obs,
                                  const Vector& X) {
  const Index p = pm.forced_dim;
  const Index r = pm.gap;
  require(X.size() == r * p, "forced trajectory has the wrong length");
  const Index first = obs.time - r;
  PartialSweep s;
  s.xs.reserve(static_cast<std::size_t>(r + 1));
  s.ys.reserve(static_cast<std::size_t>(r + 1));
  s.xs.push_back(start.x);
  s.ys.push_back(start.y);
  for (Index k = 0; k < r; ++k) {
    const SplitVector next = pm.transition(s.xs.back(), s.ys.back(), first + k);
    Vector xk = X.segment(k * p, p);
    Vector e = xk - next.forced;
    s.value += 0.5 * e.cwiseAbs2().cwiseQuotient(pm.forced_variance).sum();
    s.residuals.push_back(std::move(e));
    s.xs.push_back(std::move(xk));
    s.ys.push_back(next.unforced);
  }
  s.misfit = pm.observe(s.xs.back(), s.ys.back()) - obs.z;
  s.value += 0.5 * pm.obs_noise.mahalanobis(s.misfit);
  return s;
}

}  // namespace detail

/// One forced transition plus the data term; the unforced state at the data is g(prev).
inline double build_F_partial_dense(const PartialNoiseModel& pm, const SplitState& prev, const Observation& obs,
                                    const Vector& X_next) {
  const SplitVector next = pm.transition(prev.x, prev.y, obs.time - 1);
  require(X_next.size() == pm.forced_dim, "forced state has the wrong length");
  const Vector e = X_next - next.forced;
  return 0.5 * e.cwiseAbs2().cwiseQuotient(pm.forced_variance).sum() +
         0.5 * pm.obs_noise.mahalanobis(pm.observe(X_next, next.unforced) - obs.z);
}

inline Vector grad_F_partial_dense(const PartialNoiseModel& pm, const SplitState& prev, const Observation& obs,
                                   const Vector& X_next) {
  const SplitVector next = pm.transition(prev.x, prev.y, obs.time - 1);
  const Vector misfit = pm.observe(X_next, next.unforced) - obs.z;
  return (X_next - next.forced).cwiseQuotient(pm.forced_variance) +
         pm.hx(X_next, next.unforced).transpose() * pm.obs_noise.solve(misfit);
}

/// F over r forced transitions with the unforced trajectory rebuilt from X.
inline double build_F_partial_sparse(const PartialNoiseModel& pm, const SplitState& start, const Observation& obs,
                                     const Vector& X) {
  return detail::partial_sweep(pm, start, obs, X).value;
}

/// Gradient by forward sensitivities S_{i,k} = dY^i / dX^k:
/// S_{k+1,k} = g_x(k), S_{i+1,k} = g_y(i) S_{i,k}.
inline Vector grad_F_partial_sparse(const PartialNoiseModel& pm, const SplitState& start, const Observation& obs,
                                    const Vector& X) {
  const Index p = pm.forced_dim;
  const Index r = pm.gap;
  const Index first = obs.time - r;
  const detail::PartialSweep s = detail::partial_sweep(pm, start, obs, X);
  std::vector<Vector> scaled;  // scaled[i] = Sigma^{-1} e_{i+1}
  scaled.reserve(static_cast<std::size_t>(r));
  for (const auto& e : s.residuals) {
    scaled.push_back(e.cwiseQuotient(pm.forced_variance));
  }
  const auto rs = static_cast<std::size_t>(r);
  const Vector data = pm.obs_noise.solve(s.misfit);
  const Vector data_x = pm.hx(s.xs[rs], s.ys[rs]).transpose() * data;
  const Vector data_y = pm.hy(s.xs[rs], s.ys[rs]).transpose() * data;

  Vector grad(r * p);
  for (Index k = 1; k <= r; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    Vector block = scaled[ks - 1];
    if (k == r) {
      block += data_x;
    } else {
      const Index step = first + k;
      block -= pm.fx(s.xs[ks], s.ys[ks], step).transpose() * scaled[ks];
      Matrix sens = pm.gx(s.xs[ks], s.ys[ks], step);
      for (Index i = k + 1; i < r; ++i) {
        const auto is = static_cast<std::size_t>(i);
        block -= sens.transpose() * (pm.fy(s.xs[is], s.ys[is], first + i).transpose() * scaled[is]);
        sens = pm.gy(s.xs[is], s.ys[is], first + i) * sens;
      }
      block += sens.transpose() * data_y;
    }
    grad.segment((k - 1) * p, p) = block;
  }
  return grad;
}

/// Same gradient by one reverse sweep of vector-Jacobian products.
inline Vector grad_F_partial_sparse_adjoint(const PartialNoiseModel& pm, const SplitState& start,
                                            const Observation& obs, const Vector& X) {
  const Index p = pm.forced_dim;
  const Index r = pm.gap;
  const Index first = obs.time - r;
  const detail::PartialSweep s = detail::partial_sweep(pm, start, obs, X);
  const auto rs = static_cast<std::size_t>(r);
  const Vector data = pm.obs_noise.solve(s.misfit);

  Vector grad(r * p);
  Vector scaled_next = s.residuals[rs - 1].cwiseQuotient(pm.forced_variance);
  Vector x_bar = scaled_next + pm.hx(s.xs[rs], s.ys[rs]).transpose() * data;
  Vector y_bar = pm.hy(s.xs[rs], s.ys[rs]).transpose() * data;
  grad.segment((r - 1) * p, p) = x_bar;
  for (Index k = r - 1; k >= 1; --k) {
    const auto ks = static_cast<std::size_t>(k);
    const SplitVector back = pm.vjp(s.xs[ks], s.ys[ks], first + k, -scaled_next, y_bar);
    scaled_next = s.residuals[ks - 1].cwiseQuotient(pm.forced_variance);
    x_bar = scaled_next + back.forced;
    y_bar = back.unforced;
    grad.segment((k - 1) * p, p) = x_bar;
  }
  return grad;
}

}  // namespace ipf

#endif  // IPF_FILTERS_PARTIAL_OBJECTIVE_HPP
