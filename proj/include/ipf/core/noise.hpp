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

#ifndef IPF_CORE_NOISE_HPP
#define IPF_CORE_NOISE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/random.hpp"

namespace ipf {

inline constexpr double kDefaultEigenThreshold = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-8;

/// Eigen-decomposed model noise covariance.
///
/// `eigvecs` holds the retained directions (eigenvalue above
/// `threshold * max eigenvalue`) in descending eigenvalue order; `null_basis`
/// spans the orthogonal complement. Each vector is sign-normalized so its
/// largest-magnitude entry is positive.
struct NoiseSpec {
  Matrix cov;
  Index rank = 0;
  Matrix eigvecs;
  Vector eigvals;
  Matrix null_basis;
  double threshold = kDefaultEigenThreshold;

  [[nodiscard]] Index dim() const { return cov.rows(); }
  [[nodiscard]] bool full_rank() const { return rank == dim(); }

  /// One draw from N(0, cov) built from standard normals `xi` of length `rank`.
  [[nodiscard]] Vector color(const Vector& xi) const {
    if (rank == 0) {
      return Vector::Zero(dim());
    }
    return eigvecs * eigvals.cwiseSqrt().cwiseProduct(xi);
  }

  [[nodiscard]] Vector sample(Rng& rng) const { return color(standard_normal(rank, rng)); }

  /// cov^{-1} r; requires full rank.
  [[nodiscard]] Vector precision_times(const Vector& r) const {
    require_full_rank();
    return eigvecs * (eigvecs.transpose() * r).cwiseQuotient(eigvals);
  }

  /// r^T cov^{-1} r; requires full rank.
  [[nodiscard]] double mahalanobis(const Vector& r) const {
    require_full_rank();
    const Vector c = eigvecs.transpose() * r;
    return c.cwiseAbs2().cwiseQuotient(eigvals).sum();
  }

  void require_full_rank() const {
    if (!full_rank()) {
      throw SingularCovariance("model noise covariance is rank deficient (rank " + std::to_string(rank) + " of " +
                               std::to_string(dim()) + ")");
    }
  }
};

namespace detail {

inline void normalize_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) {
    return;
  }
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) {
    v = -v;
  }
}

}  // namespace detail

/// Diagonalizes a symmetric PSD covariance and splits retained and null directions.
inline NoiseSpec diagonalize_covariance(const Matrix& cov, double threshold = kDefaultEigenThreshold) {
  require(cov.rows() == cov.cols(), "covariance must be square");
  require(threshold >= 0.0 && threshold < 1.0, "eigenvalue threshold must lie in [0, 1)");
  require(cov.allFinite(), "covariance has non-finite entries");
  require(relative_asymmetry(cov) <= kSymmetryTolerance, "covariance is not symmetric");

  const Index m = cov.rows();
  NoiseSpec spec;
  spec.cov = cov;
  spec.threshold = threshold;
  if (m == 0) {
    spec.eigvecs.resize(0, 0);
    spec.eigvals.resize(0);
    spec.null_basis.resize(0, 0);
    return spec;
  }

  const Matrix sym = 0.5 * (cov + cov.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigen-decomposition of covariance failed");
  }
  const Vector& values = solver.eigenvalues();
  const Matrix& vectors = solver.eigenvectors();
  const double largest = std::max(values.maxCoeff(), 0.0);
  const double psd_floor = -std::max(threshold, 64.0 * std::numeric_limits<double>::epsilon()) * largest;
  require(values.minCoeff() >= psd_floor && (largest > 0.0 || values.minCoeff() >= 0.0),
          "covariance is not positive semi-definite");

  // Eigen sorts ascending; walk from the top.
  std::vector<Index> kept;
  std::vector<Index> dropped;
  for (Index i = m - 1; i >= 0; --i) {
    if (largest > 0.0 && values[i] > threshold * largest && values[i] > 0.0) {
      kept.push_back(i);
    } else {
      dropped.push_back(i);
    }
  }
  spec.rank = static_cast<Index>(kept.size());
  spec.eigvecs.resize(m, spec.rank);
  spec.eigvals.resize(spec.rank);
  for (Index j = 0; j < spec.rank; ++j) {
    spec.eigvecs.col(j) = vectors.col(kept[static_cast<std::size_t>(j)]);
    spec.eigvals[j] = values[kept[static_cast<std::size_t>(j)]];
    detail::normalize_sign(spec.eigvecs.col(j));
  }
  spec.null_basis.resize(m, m - spec.rank);
  for (Index j = 0; j < m - spec.rank; ++j) {
    spec.null_basis.col(j) = vectors.col(dropped[static_cast<std::size_t>(j)]);
    detail::normalize_sign(spec.null_basis.col(j));
  }
  return spec;
}

/// Symmetric positive-definite covariance with a cached factorization.
class GaussianCovariance {
 public:
  GaussianCovariance() = default;

  explicit GaussianCovariance(Matrix cov) : cov_(std::move(cov)) {
    require(cov_.rows() == cov_.cols(), "covariance must be square");
    require(cov_.allFinite(), "covariance has non-finite entries");
    require(relative_asymmetry(cov_) <= kSymmetryTolerance, "covariance is not symmetric");
    diagonal_ = is_exactly_diagonal(cov_);
    if (diagonal_) {
      const Vector d = cov_.diagonal();
      if (d.size() > 0 && d.minCoeff() <= 0.0) {
        throw SingularCovariance("covariance is not positive definite");
      }
      inv_diag_ = d.cwiseInverse();
      sqrt_diag_ = d.cwiseSqrt();
      log_det_ = d.array().log().sum();
    } else {
      llt_.compute(0.5 * (cov_ + cov_.transpose()));
      if (llt_.info() != Eigen::Success) {
        throw SingularCovariance("covariance is not positive definite");
      }
      log_det_ = 2.0 * Vector(llt_.matrixL().toDenseMatrix().diagonal()).array().log().sum();
    }
  }

  static GaussianCovariance isotropic(Index dim, double variance) {
    return GaussianCovariance(Matrix(Vector::Constant(dim, variance).asDiagonal()));
  }

  [[nodiscard]] Index dim() const { return cov_.rows(); }
  [[nodiscard]] const Matrix& cov() const { return cov_; }
  [[nodiscard]] double log_det() const { return log_det_; }

  /// cov^{-1} r
  [[nodiscard]] Vector solve(const Vector& r) const {
    if (diagonal_) {
      return r.cwiseProduct(inv_diag_);
    }
    return llt_.solve(r);
  }

  /// cov^{-1} A for a matrix right-hand side.
  [[nodiscard]] Matrix solve(const Matrix& a) const {
    if (diagonal_) {
      return inv_diag_.asDiagonal() * a;
    }
    return llt_.solve(a);
  }

  /// r^T cov^{-1} r
  [[nodiscard]] double mahalanobis(const Vector& r) const {
    if (diagonal_) {
      return r.cwiseAbs2().dot(inv_diag_);
    }
    return llt_.matrixL().solve(r).squaredNorm();
  }

  /// Lower-triangular L with L L^T = cov.
  [[nodiscard]] Matrix sqrt_factor() const {
    if (diagonal_) {
      return sqrt_diag_.asDiagonal();
    }
    return llt_.matrixL();
  }

  [[nodiscard]] Vector color(const Vector& xi) const {
    if (diagonal_) {
      return sqrt_diag_.cwiseProduct(xi);
    }
    return llt_.matrixL() * xi;
  }

  [[nodiscard]] Vector sample(Rng& rng) const { return color(standard_normal(dim(), rng)); }

 private:
  Matrix cov_;
  bool diagonal_ = true;
  Vector inv_diag_;
  Vector sqrt_diag_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

}  // namespace ipf

#endif  // IPF_CORE_NOISE_HPP
