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

#ifndef IPF_CORE_HEAT_MODEL_HPP
#define IPF_CORE_HEAT_MODEL_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/noise.hpp"
#include "ipf/core/state_space.hpp"

namespace ipf {

/// Pointwise nonlinearity u -> source(u) with its derivative.
struct SourceTerm {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

inline SourceTerm zero_source() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

/// source(u) = -a u^3
inline SourceTerm cubic_source(double a) {
  return {[a](double u) { return -a * u * u * u; }, [a](double u) { return -3.0 * a * u * u; }};
}

/// source(u) = a sin(u)
inline SourceTerm sine_source(double a) {
  return {[a](double u) { return a * std::sin(u); }, [a](double u) { return a * std::cos(u); }};
}

struct HeatModelOptions {
  Index modes = 10;         // m
  Index forced_modes = 10;  // c
  SourceTerm source = zero_source();
  double dt = 1e-3;
  Index gap = 1;
  Matrix obs_matrix;   // defaults to identity
  double obs_std = 0.1;
  double eig_threshold = kDefaultEigenThreshold;
};

namespace detail {

/// Sine-basis projection by uniform quadrature on [0, 1].
struct SineGalerkin {
  Matrix basis;  // basis(i, k) = sqrt(2) sin((k+1) pi s_i)
  double weight = 0.0;

  explicit SineGalerkin(Index m) {
    const Index q = 4 * (m + 1);
    basis.resize(q - 1, m);
    for (Index i = 1; i < q; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(q);
      for (Index k = 0; k < m; ++k) {
        basis(i - 1, k) = std::numbers::sqrt2 * std::sin(static_cast<double>(k + 1) * std::numbers::pi * s);
      }
    }
    weight = 1.0 / static_cast<double>(q);
  }
};

}  // namespace detail

/// Galerkin truncation of u_t = u_ss + source(u) + smooth noise on [0, 1]
/// with homogeneous Dirichlet conditions, advanced by forward Euler.
inline StateSpaceModel build_heat_model(const HeatModelOptions& opts) {
  require(opts.modes >= 1, "heat model needs at least one mode");
  require(opts.forced_modes >= 1, "heat model needs at least one forced mode");
  require(opts.dt > 0.0, "time step must be positive");
  require(static_cast<bool>(opts.source.value) && static_cast<bool>(opts.source.derivative),
          "source term needs a value and a derivative");
  const Index m = opts.modes;
  const double dt = opts.dt;

  Vector laplacian(m);
  for (Index k = 0; k < m; ++k) {
    const double freq = static_cast<double>(k + 1) * std::numbers::pi;
    laplacian[k] = -freq * freq;
  }
  const detail::SineGalerkin galerkin(m);
  const SourceTerm source = opts.source;

  StateSpaceModel model;
  model.dim = m;
  model.drift = [laplacian, galerkin, source, dt](const Vector& x, Index) {
    const Vector u = galerkin.basis * x;
    const Vector s = u.unaryExpr(source.value);
    return Vector(x + dt * (laplacian.cwiseProduct(x) + galerkin.weight * (galerkin.basis.transpose() * s)));
  };
  model.drift_jacobian = [laplacian, galerkin, source, dt, m](const Vector& x, Index) {
    const Vector u = galerkin.basis * x;
    const Vector ds = u.unaryExpr(source.derivative);
    Matrix jac = galerkin.weight * (galerkin.basis.transpose() * ds.asDiagonal() * galerkin.basis);
    jac.diagonal() += laplacian;
    return Matrix(Matrix::Identity(m, m) + dt * jac);
  };

  Vector amplitude = Vector::Zero(m);
  for (Index k = 0; k < std::min(m, opts.forced_modes); ++k) {
    amplitude[k] = std::sqrt(dt) * std::exp(-static_cast<double>(k + 1)) / std::numbers::sqrt2;
  }
  model.noise = diagonalize_covariance(Matrix(amplitude.cwiseAbs2().asDiagonal()), opts.eig_threshold);
  if (opts.forced_modes > m) {
    model.warnings.push_back("forced mode count " + std::to_string(opts.forced_modes) + " exceeds the " +
                             std::to_string(m) + " retained modes; noise is full rank and ill-conditioned");
  }

  const Matrix h = opts.obs_matrix.size() == 0 ? Matrix(Matrix::Identity(m, m)) : opts.obs_matrix;
  require(h.cols() == m, "observation matrix must have one column per mode");
  model.obs_noise = GaussianCovariance::isotropic(h.rows(), opts.obs_std * opts.obs_std);
  set_affine_observation(model, h, Vector::Zero(h.rows()));
  model.gap = opts.gap;
  model.validate();
  return model;
}

/// Positional form matching the usual (m, c, source, dt) parametrization.
inline StateSpaceModel build_heat_model(Index m, Index c, const SourceTerm& source, double dt) {
  HeatModelOptions opts;
  opts.modes = m;
  opts.forced_modes = c;
  opts.source = source;
  opts.dt = dt;
  return build_heat_model(opts);
}

}  // namespace ipf

#endif  // IPF_CORE_HEAT_MODEL_HPP
