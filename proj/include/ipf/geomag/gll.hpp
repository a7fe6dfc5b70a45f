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

#ifndef IPF_GEOMAG_GLL_HPP
#define IPF_GEOMAG_GLL_HPP

#include <cmath>
#include <numbers>
#include <utility>

#include "ipf/core/errors.hpp"
#include "ipf/core/linalg.hpp"

namespace ipf::geomag {

/// P_n(x) and P_{n-1}(x) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
  double prev = 1.0;
  double cur = x;
  if (n == 0) {
    return {1.0, 0.0};
  }
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

inline double legendre(int n, double x) { return legendre_pair(n, x).first; }

/// Gauss-Lobatto-Legendre nodes (ascending) and weights.
struct GllRule {
  Vector nodes;
  Vector weights;
};

inline GllRule gll_nodes_weights(int order) {
  require(order >= 1, "GLL order must be at least 1");
  const int n = order;
  GllRule rule;
  rule.nodes.resize(n + 1);
  rule.weights.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    // Chebyshev-Gauss-Lobatto start, Newton on (1 - x^2) P_N'(x).
    double x = -std::cos(std::numbers::pi * i / n);
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pn1] = legendre_pair(n, x);
      const double step = (x * pn - pn1) / ((n + 1) * pn);
      x -= step;
      if (std::abs(step) <= 1e-16) {
        break;
      }
    }
    rule.nodes[i] = x;
  }
  for (int i = 0; i <= n / 2; ++i) {
    const double half = 0.5 * (rule.nodes[n - i] - rule.nodes[i]);
    rule.nodes[i] = -half;
    rule.nodes[n - i] = half;
  }
  rule.nodes[0] = -1.0;
  rule.nodes[n] = 1.0;
  if (n % 2 == 0) {
    rule.nodes[n / 2] = 0.0;
  }
  for (int i = 0; i <= n; ++i) {
    const double pn = legendre(n, rule.nodes[i]);
    rule.weights[i] = 2.0 / (n * (n + 1.0) * pn * pn);
  }
  return rule;
}

/// (D f)_i = f'(x_i) for the degree-N interpolant of nodal values f.
inline Matrix gll_differentiation_matrix(const Vector& nodes) {
  const Index size = nodes.size();
  const int n = static_cast<int>(size) - 1;
  Vector pn(size);
  for (Index i = 0; i < size; ++i) {
    pn[i] = legendre(n, nodes[i]);
  }
  Matrix d = Matrix::Zero(size, size);
  for (Index i = 0; i < size; ++i) {
    double row = 0.0;
    for (Index j = 0; j < size; ++j) {
      if (i != j) {
        d(i, j) = pn[i] / (pn[j] * (nodes[i] - nodes[j]));
        row += d(i, j);
      }
    }
    d(i, i) = -row;
  }
  return d;
}

/// Rows evaluate the Lagrange basis of the GLL nodes at `points`.
inline Matrix gll_interpolation_matrix(const Vector& nodes, const Vector& points) {
  const Index size = nodes.size();
  const int n = static_cast<int>(size) - 1;
  Vector pn(size);
  for (Index j = 0; j < size; ++j) {
    pn[j] = legendre(n, nodes[j]);
  }
  Matrix out = Matrix::Zero(points.size(), size);
  for (Index i = 0; i < points.size(); ++i) {
    const double x = points[i];
    Index hit = -1;
    for (Index j = 0; j < size; ++j) {
      if (x == nodes[j]) {
        hit = j;
      }
    }
    if (hit >= 0) {
      out(i, hit) = 1.0;
      continue;
    }
    // (x^2 - 1) P_N'(x) = N (x P_N(x) - P_{N-1}(x))
    const auto [p, p1] = legendre_pair(n, x);
    const double numerator = x * p - p1;
    for (Index j = 0; j < size; ++j) {
      out(i, j) = numerator / ((n + 1.0) * pn[j] * (x - nodes[j]));
    }
  }
  return out;
}

}  // namespace ipf::geomag

#endif  // IPF_GEOMAG_GLL_HPP
