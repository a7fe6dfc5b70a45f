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

#ifndef IPF_GEOMAG_GEOMAG_MODEL_HPP
#define IPF_GEOMAG_GEOMAG_MODEL_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/noise.hpp"
#include "ipf/core/partial_noise.hpp"
#include "ipf/core/random.hpp"
#include "ipf/core/state_space.hpp"
#include "ipf/geomag/gll.hpp"

namespace ipf::geomag {

struct GeoConfig {
  int order = 100;  // N
  double nu = 1e-3;
  double delta = 0.002;
  double g_u = 0.01;
  double g_b = 1.0;
  int cutoff = 10;
  double eig_threshold = 1e-10;
  bool advection = true;  // false leaves two decoupled heat equations
};

/// Nodal operators on the N-1 interior GLL nodes.
struct SpectralOperators {
  int order = 0;
  double nu = 0.0;
  double delta = 0.0;
  Vector nodes;         // all N+1 GLL nodes
  Vector quad_weights;  // all N+1 weights
  Vector interior;      // interior nodes
  Vector mass;          // diagonal of M
  Matrix diff;          // D, interior block
  Matrix diff2;         // D^2, interior block
  Vector boundary_dx;   // diagonal of Psi_x^B: derivative of the b boundary lift
  Vector boundary_dxx;  // Psi_xx^B: second derivative of the b boundary lift
  Matrix lhs_u;         // M - delta nu M D^2
  Matrix lhs_b;         // M - delta M D^2
  Matrix step_u;        // lhs_u^{-1} M
  Matrix step_b;        // lhs_b^{-1} M
};

inline SpectralOperators build_spectral_operators(int order, double nu, double delta) {
  require(order >= 4, "spectral order must be at least 4");
  require(nu > 0.0 && delta > 0.0, "viscosity and time step must be positive");
  SpectralOperators ops;
  ops.order = order;
  ops.nu = nu;
  ops.delta = delta;
  const GllRule rule = gll_nodes_weights(order);
  ops.nodes = rule.nodes;
  ops.quad_weights = rule.weights;
  const Index m = order - 1;
  ops.interior = rule.nodes.segment(1, m);
  ops.mass = rule.weights.segment(1, m);
  const Matrix d_full = gll_differentiation_matrix(rule.nodes);
  const Matrix d2_full = d_full * d_full;
  ops.diff = d_full.block(1, 1, m, m);
  ops.diff2 = d2_full.block(1, 1, m, m);
  // b = lift + interior values with lift(-1) = -1, lift(1) = 1.
  ops.boundary_dx = d_full.col(order).segment(1, m) - d_full.col(0).segment(1, m);
  ops.boundary_dxx = d2_full.col(order).segment(1, m) - d2_full.col(0).segment(1, m);
  const Matrix mass_d2 = ops.mass.asDiagonal() * ops.diff2;
  ops.lhs_u = Matrix(ops.mass.asDiagonal()) - delta * nu * mass_d2;
  ops.lhs_b = Matrix(ops.mass.asDiagonal()) - delta * mass_d2;
  const Eigen::PartialPivLU<Matrix> lu_u(ops.lhs_u);
  const Eigen::PartialPivLU<Matrix> lu_b(ops.lhs_b);
  ops.step_u = lu_u.solve(Matrix(ops.mass.asDiagonal()));
  ops.step_b = lu_b.solve(Matrix(ops.mass.asDiagonal()));
  if (!ops.step_u.allFinite() || !ops.step_b.allFinite()) {
    throw NumericalError("implicit operator factorization failed");
  }
  return ops;
}

/// Smooth noise modes at the interior nodes: sin(k pi x) and cos((2k-1) pi x / 2), k = 1..cutoff.
inline Matrix noise_modes(const Vector& interior, int cutoff) {
  Matrix modes(interior.size(), 2 * cutoff);
  for (int k = 1; k <= cutoff; ++k) {
    for (Index i = 0; i < interior.size(); ++i) {
      modes(i, k - 1) = std::sin(k * std::numbers::pi * interior[i]);
      modes(i, cutoff + k - 1) = std::cos((2.0 * k - 1.0) * std::numbers::pi * interior[i] / 2.0);
    }
  }
  return modes;
}

/// Increment covariances and their per-step effect on the state.
struct NoiseCovariances {
  Matrix modes;      // F = [F_s | F_c], m x 2 cutoff
  Matrix sigma_u;    // g_u^2 delta M F F^T M
  Matrix sigma_b;
  Matrix map_u;      // g_u sqrt(delta) lhs_u^{-1} M F: standard normals -> state increment
  Matrix map_b;
  NoiseSpec spec_u;  // diagonalized map_u map_u^T
  NoiseSpec spec_b;
};

inline NoiseCovariances build_noise_covariances(const SpectralOperators& ops, double g_u, double g_b, int cutoff,
                                                double threshold) {
  require(cutoff >= 1, "noise cutoff must be at least 1");
  NoiseCovariances nc;
  nc.modes = noise_modes(ops.interior, cutoff);
  const Matrix mf = ops.mass.asDiagonal() * nc.modes;
  const Matrix base = ops.delta * mf * mf.transpose();
  nc.sigma_u = g_u * g_u * base;
  nc.sigma_b = g_b * g_b * base;
  const Matrix pf_u = ops.step_u * nc.modes;
  const Matrix pf_b = ops.step_b * nc.modes;
  nc.map_u = g_u * std::sqrt(ops.delta) * pf_u;
  nc.map_b = g_b * std::sqrt(ops.delta) * pf_b;
  nc.spec_u = diagonalize_covariance(Matrix(nc.map_u * nc.map_u.transpose()), threshold);
  nc.spec_b = diagonalize_covariance(Matrix(nc.map_b * nc.map_b.transpose()), threshold);
  return nc;
}

/// Interior nodal values of both fields.
struct GeoState {
  Vector u;
  Vector b;
};

/// Standard normal mode coefficients for one step (length 2 cutoff each).
struct NoiseDraw {
  Vector u;
  Vector b;
};

/// Interpolation of b at k equally spaced points of `interval`.
struct GeoObservation {
  Vector points;
  Matrix full;      // k x (N+1), all GLL nodes
  Matrix interior;  // k x (N-1)
  Vector offset;    // contribution of b(-1) = -1, b(1) = 1
  double lo = 0.0;
  double hi = 1.0;
};

/// Discretized coupled u-b system with IMEX Euler stepping.
class GeoModel {
 public:
  explicit GeoModel(const GeoConfig& config)
      : config_(config),
        ops_(build_spectral_operators(config.order, config.nu, config.delta)),
        noise_(build_noise_covariances(ops_, config.g_u, config.g_b, config.cutoff, config.eig_threshold)) {
    basis_u_.resize(dim(), dim());
    basis_u_ << noise_.spec_u.eigvecs, noise_.spec_u.null_basis;
    basis_b_.resize(dim(), dim());
    basis_b_ << noise_.spec_b.eigvecs, noise_.spec_b.null_basis;
  }

  [[nodiscard]] const GeoConfig& config() const { return config_; }
  [[nodiscard]] const SpectralOperators& ops() const { return ops_; }
  [[nodiscard]] const NoiseCovariances& noise() const { return noise_; }
  [[nodiscard]] Index dim() const { return ops_.interior.size(); }
  [[nodiscard]] Index forced_u() const { return noise_.spec_u.rank; }
  [[nodiscard]] Index forced_b() const { return noise_.spec_b.rank; }
  [[nodiscard]] Index forced_dim() const { return forced_u() + forced_b(); }
  [[nodiscard]] Index unforced_dim() const { return 2 * dim() - forced_dim(); }
  [[nodiscard]] int mode_count() const { return 2 * config_.cutoff; }

  /// Explicit right-hand sides before the implicit solve (without the mass factor).
  [[nodiscard]] GeoState explicit_part(const GeoState& s) const {
    const double d = config_.delta;
    GeoState out;
    if (!config_.advection) {
      out.u = s.u;
      out.b = s.b + d * ops_.boundary_dxx;
      return out;
    }
    const Vector du = ops_.diff * s.u;
    const Vector db = ops_.diff * s.b + ops_.boundary_dx;
    out.u = s.u + d * (s.b.cwiseProduct(db) - s.u.cwiseProduct(du));
    out.b = s.b + d * (s.b.cwiseProduct(du) - s.u.cwiseProduct(db) + ops_.boundary_dxx);
    return out;
  }

  [[nodiscard]] GeoState deterministic_step(const GeoState& s) const {
    const GeoState rhs = explicit_part(s);
    return {ops_.step_u * rhs.u, ops_.step_b * rhs.b};
  }

  /// One IMEX step; `draw` (standard normals) adds the model noise.
  [[nodiscard]] GeoState step(const GeoState& s, const NoiseDraw* draw = nullptr, Index step_index = -1) const {
    GeoState next = deterministic_step(s);
    if (draw != nullptr) {
      require(draw->u.size() == mode_count() && draw->b.size() == mode_count(), "noise draw has the wrong length");
      next.u += noise_.map_u * draw->u;
      next.b += noise_.map_b * draw->b;
    }
    if (!next.u.allFinite() || !next.b.allFinite()) {
      throw NumericalError("geomagnetic state blew up at step " + std::to_string(step_index));
    }
    return next;
  }

  [[nodiscard]] NoiseDraw draw_noise(Rng& rng) const {
    NoiseDraw d;
    d.u = standard_normal(mode_count(), rng);
    d.b = standard_normal(mode_count(), rng);
    return d;
  }

  /// Jacobian of deterministic_step with respect to the stacked state [u; b].
  [[nodiscard]] Matrix step_jacobian(const GeoState& s) const {
    const Index m = dim();
    const double d = config_.delta;
    Matrix jac = Matrix::Zero(2 * m, 2 * m);
    jac.topLeftCorner(m, m).setIdentity();
    jac.bottomRightCorner(m, m).setIdentity();
    if (config_.advection) {
      const Vector du = ops_.diff * s.u;
      const Vector db = ops_.diff * s.b + ops_.boundary_dx;
      jac.topLeftCorner(m, m) -= d * (Matrix(du.asDiagonal()) + s.u.asDiagonal() * ops_.diff);
      jac.topRightCorner(m, m) += d * (Matrix(db.asDiagonal()) + s.b.asDiagonal() * ops_.diff);
      jac.bottomLeftCorner(m, m) += d * (s.b.asDiagonal() * ops_.diff - Matrix(db.asDiagonal()));
      jac.bottomRightCorner(m, m) += d * (Matrix(du.asDiagonal()) - s.u.asDiagonal() * ops_.diff);
    }
    jac.topRows(m) = ops_.step_u * jac.topRows(m);
    jac.bottomRows(m) = ops_.step_b * jac.bottomRows(m);
    return jac;
  }

  /// Transposed Jacobian of deterministic_step applied to a cotangent.
  [[nodiscard]] GeoState step_vjp(const GeoState& s, const GeoState& w) const {
    const double d = config_.delta;
    const Vector cu = ops_.step_u.transpose() * w.u;
    const Vector cb = ops_.step_b.transpose() * w.b;
    if (!config_.advection) {
      return {cu, cb};
    }
    const Vector du = ops_.diff * s.u;
    const Vector db = ops_.diff * s.b + ops_.boundary_dx;
    const Matrix& dt = ops_.diff;
    GeoState out;
    out.u = cu - d * (du.cwiseProduct(cu) + dt.transpose() * s.u.cwiseProduct(cu)) +
            d * (dt.transpose() * s.b.cwiseProduct(cb) - db.cwiseProduct(cb));
    out.b = d * (db.cwiseProduct(cu) + dt.transpose() * s.b.cwiseProduct(cu)) + cb +
            d * (du.cwiseProduct(cb) - dt.transpose() * s.u.cwiseProduct(cb));
    return out;
  }

  /// u = sin(pi x) + 0.4 sin(5 pi x), b = cos(pi x) + 2 sin(pi (x + 1) / 4).
  [[nodiscard]] static double mean_u(double x) {
    return std::sin(std::numbers::pi * x) + 0.4 * std::sin(5.0 * std::numbers::pi * x);
  }
  [[nodiscard]] static double mean_b(double x) {
    return std::cos(std::numbers::pi * x) + 2.0 * std::sin(std::numbers::pi * (x + 1.0) / 4.0);
  }

  [[nodiscard]] GeoState mean_initial_state() const {
    return {ops_.interior.unaryExpr(&GeoModel::mean_u), ops_.interior.unaryExpr(&GeoModel::mean_b)};
  }

  /// Mean fields plus, when `randomize`, Gaussian perturbations with the increment covariances.
  [[nodiscard]] GeoState initial_state(bool randomize, Rng& rng) const {
    GeoState s = mean_initial_state();
    if (randomize) {
      const Matrix mf = ops_.mass.asDiagonal() * noise_.modes;
      const double scale = std::sqrt(config_.delta);
      s.u += config_.g_u * scale * (mf * standard_normal(mode_count(), rng));
      s.b += config_.g_b * scale * (mf * standard_normal(mode_count(), rng));
    }
    return s;
  }

  [[nodiscard]] static Vector full_field(const Vector& interior, double left, double right) {
    Vector out(interior.size() + 2);
    out << left, interior, right;
    return out;
  }
  [[nodiscard]] static Vector full_u(const Vector& u) { return full_field(u, 0.0, 0.0); }
  [[nodiscard]] static Vector full_b(const Vector& b) { return full_field(b, -1.0, 1.0); }

  [[nodiscard]] Vector pack(const GeoState& s) const {
    Vector out(2 * dim());
    out << s.u, s.b;
    return out;
  }
  [[nodiscard]] GeoState unpack(const Vector& v) const { return {v.head(dim()), v.tail(dim())}; }

  /// Forced coordinates [x_u; x_b] and unforced coordinates [y_u; y_b].
  [[nodiscard]] SplitVector to_split(const GeoState& s) const {
    const Index pu = forced_u();
    const Index pb = forced_b();
    const Vector cu = basis_u_.transpose() * s.u;
    const Vector cb = basis_b_.transpose() * s.b;
    SplitVector out;
    out.forced.resize(pu + pb);
    out.forced << cu.head(pu), cb.head(pb);
    out.unforced.resize(2 * dim() - pu - pb);
    out.unforced << cu.tail(dim() - pu), cb.tail(dim() - pb);
    return out;
  }

  [[nodiscard]] GeoState from_split(const Vector& x, const Vector& y) const {
    const Index pu = forced_u();
    const Index pb = forced_b();
    const Index m = dim();
    Vector cu(m);
    cu << x.head(pu), y.head(m - pu);
    Vector cb(m);
    cb << x.tail(pb), y.tail(m - pb);
    return {basis_u_ * cu, basis_b_ * cb};
  }

  /// Lagrange interpolation of b at k equally spaced points of [lo, hi].
  [[nodiscard]] GeoObservation observation_operator(Index k, double lo = 0.0, double hi = 1.0) const {
    require(k >= 1, "need at least one observation location");
    require(lo >= -1.0 && hi <= 1.0 && lo <= hi, "observation interval must lie in [-1, 1]");
    GeoObservation obs;
    obs.lo = lo;
    obs.hi = hi;
    obs.points = k == 1 ? Vector::Constant(1, 0.5 * (lo + hi)) : Vector(Vector::LinSpaced(k, lo, hi));
    obs.full = gll_interpolation_matrix(ops_.nodes, obs.points);
    obs.interior = obs.full.middleCols(1, dim());
    obs.offset = obs.full.col(config_.order) - obs.full.col(0);
    return obs;
  }

  [[nodiscard]] const Matrix& basis_u() const { return basis_u_; }
  [[nodiscard]] const Matrix& basis_b() const { return basis_b_; }

 private:
  GeoConfig config_;
  SpectralOperators ops_;
  NoiseCovariances noise_;
  Matrix basis_u_;  // [V_u | N_u]
  Matrix basis_b_;
};

inline Matrix observation_matrix(const GeoModel& geo, Index k, double lo = 0.0, double hi = 1.0) {
  return geo.observation_operator(k, lo, hi).full;
}

inline GeoState imex_step(const GeoModel& geo, const GeoState& s, const NoiseDraw* draw = nullptr) {
  return geo.step(s, draw);
}

/// Full-state view for the bootstrap and ensemble Kalman filters.
inline StateSpaceModel state_space_model(std::shared_ptr<const GeoModel> geo, const GeoObservation& obs,
                                         double obs_std, Index gap) {
  const Index m = geo->dim();
  StateSpaceModel model;
  model.dim = 2 * m;
  model.drift = [geo](const Vector& s, Index) { return geo->pack(geo->deterministic_step(geo->unpack(s))); };
  model.drift_jacobian = [geo](const Vector& s, Index) { return geo->step_jacobian(geo->unpack(s)); };

  const NoiseSpec& su = geo->noise().spec_u;
  const NoiseSpec& sb = geo->noise().spec_b;
  NoiseSpec spec;
  spec.cov = Matrix::Zero(2 * m, 2 * m);
  spec.cov.topLeftCorner(m, m) = su.cov;
  spec.cov.bottomRightCorner(m, m) = sb.cov;
  spec.threshold = geo->config().eig_threshold;
  spec.rank = su.rank + sb.rank;
  std::vector<std::pair<double, Vector>> pairs;
  for (Index j = 0; j < su.rank; ++j) {
    Vector v = Vector::Zero(2 * m);
    v.head(m) = su.eigvecs.col(j);
    pairs.emplace_back(su.eigvals[j], std::move(v));
  }
  for (Index j = 0; j < sb.rank; ++j) {
    Vector v = Vector::Zero(2 * m);
    v.tail(m) = sb.eigvecs.col(j);
    pairs.emplace_back(sb.eigvals[j], std::move(v));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  spec.eigvecs.resize(2 * m, spec.rank);
  spec.eigvals.resize(spec.rank);
  for (Index j = 0; j < spec.rank; ++j) {
    spec.eigvals[j] = pairs[static_cast<std::size_t>(j)].first;
    spec.eigvecs.col(j) = pairs[static_cast<std::size_t>(j)].second;
  }
  spec.null_basis = Matrix::Zero(2 * m, 2 * m - spec.rank);
  spec.null_basis.topLeftCorner(m, m - su.rank) = su.null_basis;
  spec.null_basis.bottomRightCorner(m, m - sb.rank) = sb.null_basis;
  model.noise = std::move(spec);

  Matrix h = Matrix::Zero(obs.interior.rows(), 2 * m);
  h.rightCols(m) = obs.interior;
  model.obs_noise = GaussianCovariance::isotropic(obs.interior.rows(), obs_std * obs_std);
  set_affine_observation(model, h, obs.offset);
  model.gap = gap;
  model.validate();
  return model;
}

/// Forced/unforced view for the implicit filter.
inline PartialNoiseModel partial_model(std::shared_ptr<const GeoModel> geo, const GeoObservation& obs,
                                       double obs_std, Index gap) {
  const Index m = geo->dim();
  const Index pu = geo->forced_u();
  const Index pb = geo->forced_b();
  PartialNoiseModel pm;
  pm.forced_dim = pu + pb;
  pm.unforced_dim = 2 * m - pu - pb;
  pm.forced_variance.resize(pu + pb);
  pm.forced_variance << geo->noise().spec_u.eigvals, geo->noise().spec_b.eigvals;
  pm.transition = [geo](const Vector& x, const Vector& y, Index) {
    return geo->to_split(geo->deterministic_step(geo->from_split(x, y)));
  };
  pm.transition_vjp = [geo](const Vector& x, const Vector& y, Index, const Vector& a, const Vector& b) {
    const GeoState w = geo->from_split(a, b);
    return geo->to_split(geo->step_vjp(geo->from_split(x, y), w));
  };

  pm.forced_basis = Matrix::Zero(2 * m, pu + pb);
  pm.forced_basis.topLeftCorner(m, pu) = geo->basis_u().leftCols(pu);
  pm.forced_basis.bottomRightCorner(m, pb) = geo->basis_b().leftCols(pb);
  pm.unforced_basis = Matrix::Zero(2 * m, 2 * m - pu - pb);
  pm.unforced_basis.topLeftCorner(m, m - pu) = geo->basis_u().rightCols(m - pu);
  pm.unforced_basis.bottomRightCorner(m, m - pb) = geo->basis_b().rightCols(m - pb);
  const Matrix fb = pm.forced_basis;
  const Matrix ub = pm.unforced_basis;
  auto block = [geo, fb, ub](bool from_forced, bool to_forced) {
    return [geo, fb, ub, from_forced, to_forced](const Vector& x, const Vector& y, Index) {
      const Matrix jac = geo->step_jacobian(geo->from_split(x, y));
      const Matrix& out = to_forced ? fb : ub;
      const Matrix& in = from_forced ? fb : ub;
      return Matrix(out.transpose() * jac * in);
    };
  };
  pm.jac_fx = block(true, true);
  pm.jac_fy = block(false, true);
  pm.jac_gx = block(true, false);
  pm.jac_gy = block(false, false);

  const Index k = obs.interior.rows();
  SplitAffineObservation lin;
  lin.forced = Matrix::Zero(k, pu + pb);
  lin.forced.rightCols(pb) = obs.interior * geo->basis_b().leftCols(pb);
  lin.unforced = Matrix::Zero(k, 2 * m - pu - pb);
  lin.unforced.rightCols(m - pb) = obs.interior * geo->basis_b().rightCols(m - pb);
  lin.offset = obs.offset;
  pm.linear_obs = lin;
  pm.observe = [lin](const Vector& x, const Vector& y) {
    return Vector(lin.forced * x + lin.unforced * y + lin.offset);
  };
  pm.obs_noise = GaussianCovariance::isotropic(k, obs_std * obs_std);
  pm.gap = gap;
  pm.validate();
  return pm;
}

}  // namespace ipf::geomag

#endif  // IPF_GEOMAG_GEOMAG_MODEL_HPP
