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

#ifndef IPF_TESTS_HELPERS_HPP
#define IPF_TESTS_HELPERS_HPP

#include <algorithm>
#include <cstdint>

#include "ipf/core/ensemble.hpp"
#include "ipf/core/heat_model.hpp"
#include "ipf/core/linalg.hpp"
#include "ipf/core/random.hpp"
#include "ipf/core/state_space.hpp"

namespace ipf_test {

using ipf::Index;
using ipf::Matrix;
using ipf::Vector;

inline Vector probe(Index n, std::uint64_t seed, double scale = 1.0) {
  ipf::Rng rng = ipf::make_stream(seed, ipf::Stream::kTest);
  return scale * ipf::standard_normal(n, rng);
}

inline double rel_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }
inline Vector vec1(double v) { return Vector::Constant(1, v); }

/// x' = a x + noise(q), z = h x + noise(r).
inline ipf::StateSpaceModel scalar_model(double a, double q, double h, double r, Index gap = 1) {
  return ipf::build_linear_gaussian_model(mat1(a), mat1(q), mat1(h), mat1(r), gap);
}

inline ipf::StateSpaceModel heat(Index m, Index c, const ipf::SourceTerm& source, double dt, Index gap = 1,
                                 double obs_std = 0.1, Matrix obs = Matrix()) {
  ipf::HeatModelOptions opts;
  opts.modes = m;
  opts.forced_modes = c;
  opts.source = source;
  opts.dt = dt;
  opts.gap = gap;
  opts.obs_std = obs_std;
  opts.obs_matrix = std::move(obs);
  return ipf::build_heat_model(opts);
}

/// `count` copies of `x` with equal weights at model step `time`.
inline ipf::Ensemble copies(const Vector& x, std::size_t count, Index time = 0, const Vector& y = Vector()) {
  std::vector<Vector> xs(count, x);
  std::vector<Vector> ys;
  if (y.size() > 0) {
    ys.assign(count, y);
  }
  ipf::Ensemble ens = ipf::make_ensemble(xs, ys);
  ens.time = time;
  return ens;
}

}  // namespace ipf_test

#endif  // IPF_TESTS_HELPERS_HPP
