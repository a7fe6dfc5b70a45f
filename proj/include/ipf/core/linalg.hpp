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

#ifndef IPF_CORE_LINALG_HPP
#define IPF_CORE_LINALG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ipf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Largest entry of |A - A^T| relative to the largest entry of |A|.
inline double relative_asymmetry(const Matrix& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    return 0.0;
  }
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline bool is_exactly_diagonal(const Matrix& a) {
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) != 0.0) {
        return false;
      }
    }
  }
  return true;
}

/// Central-difference Jacobian of `fn` at `x`, step `rel_step * (1 + |x_i|)`.
template <class Fn>
Matrix numerical_jacobian(Fn&& fn, const Vector& x, double rel_step = 1e-6) {
  Vector probe = x;
  Matrix jac;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    const Vector plus = fn(probe);
    probe[i] = x[i] - h;
    const Vector minus = fn(probe);
    probe[i] = x[i];
    if (i == 0) {
      jac.resize(plus.size(), x.size());
    }
    jac.col(i) = (plus - minus) / (2.0 * h);
  }
  if (x.size() == 0) {
    jac.resize(fn(x).size(), 0);
  }
  return jac;
}

/// Central-difference gradient of a scalar function.
template <class Fn>
Vector numerical_gradient(Fn&& fn, const Vector& x, double rel_step = 1e-6) {
  Vector probe = x;
  Vector grad(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    const double plus = fn(probe);
    probe[i] = x[i] - h;
    const double minus = fn(probe);
    probe[i] = x[i];
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

/// Relative difference |a - b| / max(|a|, |b|, floor).
inline double relative_difference(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Repeats `block` `times` times into one stacked vector.
inline Vector tile(const Vector& block, Index times) {
  Vector out(block.size() * times);
  for (Index k = 0; k < times; ++k) {
    out.segment(k * block.size(), block.size()) = block;
  }
  return out;
}

}  // namespace ipf

#endif  // IPF_CORE_LINALG_HPP
