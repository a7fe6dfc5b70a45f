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

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "ipf/filters/full_objective.hpp"
#include "ipf/filters/minimize.hpp"
#include "ipf/filters/random_map.hpp"
#include "ipf/filters/weights.hpp"
#include "support/helpers.hpp"

namespace {

using ipf::Index;
using ipf::Matrix;
using ipf::Vector;
using ipf_test::probe;

// F(X) = phi + (X - mu)^T A (X - mu) / 2
struct Quadratic {
  double phi;
  Vector mu;
  Matrix a;
  double operator()(const Vector& x) const { return phi + 0.5 * (x - mu).dot(a * (x - mu)); }
  Vector grad(const Vector& x) const { return a * (x - mu); }
};

Quadratic random_quadratic(Index n, std::uint64_t seed) {
  const Matrix s = probe(n * n, seed).reshaped(n, n);
  return {1.5, probe(n, seed + 1), s * s.transpose() + Matrix::Identity(n, n)};
}

TEST(GradientDescent, QuadraticBowl) {
  auto f = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  auto g = [](const Vector& x) { return x; };
  ipf::DescentOptions opts;
  opts.tol = 1e-12;
  const auto rec = ipf::minimize_gradient_descent(f, g, Vector::Ones(2), opts);
  EXPECT_TRUE(rec.converged);
  EXPECT_LT(rec.mu.norm(), 1e-6);
  EXPECT_LT(rec.phi, 1e-12);
}

TEST(GradientDescent, NeverIncreasesAndEndsBelowStart) {
  const Quadratic q = random_quadratic(6, 3);
  std::vector<double> accepted;
  auto f = [&](const Vector& x) { return q(x); };
  auto g = [&](const Vector& x) {
    accepted.push_back(q(x));  // gradient is evaluated once per accepted iterate
    return q.grad(x);
  };
  const Vector x0 = probe(6, 4, 3.0);
  ipf::DescentOptions opts;
  opts.tol = 1e-6;
  const auto rec = ipf::minimize_gradient_descent(f, g, x0, opts);
  for (std::size_t i = 1; i < accepted.size(); ++i) {
    EXPECT_LE(accepted[i], accepted[i - 1]);
  }
  EXPECT_LE(rec.phi, q(x0));
  EXPECT_TRUE(std::isfinite(g(rec.mu).norm()));
}

TEST(GradientDescent, MatchesClosedFormMinimumWithTightTolerance) {
  const Matrix a = probe(16, 1, 0.4).reshaped(4, 4);
  const Matrix s = probe(16, 2, 0.5).reshaped(4, 4);
  const Matrix q = s * s.transpose() + 0.3 * Matrix::Identity(4, 4);
  const Matrix h = probe(12, 3).reshaped(3, 4);
  const auto model = ipf::build_linear_gaussian_model(a, q, h, 0.2 * Matrix::Identity(3, 3));
  const Vector end = probe(4, 4);
  const auto obs = ipf::make_observation(probe(3, 5), 1, 1);
  const auto cf = ipf::closed_form_linear_obs(model, end, obs);
  auto f = [&](const Vector& x) { return ipf::build_F_simplified(model, end, obs, x); };
  auto g = [&](const Vector& x) { return ipf::grad_F_simplified(model, end, obs, x); };
  ipf::DescentOptions opts;
  opts.tol = 1e-8;
  opts.grad_tol = 1e-12;
  opts.max_iter = 100000;
  const auto rec = ipf::minimize_gradient_descent(f, g, model.drift(end, 0), opts);
  EXPECT_NEAR(rec.phi, cf.phi, 1e-6);
  opts.tol = 0.0;
  opts.grad_tol = 1e-11;
  const auto tight = ipf::minimize_gradient_descent(f, g, model.drift(end, 0), opts);
  EXPECT_LT((tight.mu - cf.mu).norm(), 1e-6);
}

TEST(GradientDescent, NonFiniteValuesFail) {
  auto f = [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); };
  auto g = [](const Vector& x) { return x; };
  const auto rec = ipf::minimize_gradient_descent(f, g, Vector::Ones(2));
  EXPECT_FALSE(rec.converged);
  EXPECT_EQ(rec.status, ipf::MinimizeStatus::kFailed);

  auto f2 = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  auto g2 = [](const Vector& x) { return Vector(x.array() * std::numeric_limits<double>::infinity()); };
  const auto rec2 = ipf::minimize_gradient_descent(f2, g2, Vector::Ones(2));
  EXPECT_FALSE(rec2.converged);
  EXPECT_EQ(rec2.status, ipf::MinimizeStatus::kFailed);
}

TEST(GradientDescent, DefaultToleranceStopsEarly) {
  const Quadratic q = random_quadratic(5, 9);
  auto f = [&](const Vector& x) { return q(x); };
  auto g = [&](const Vector& x) { return q.grad(x); };
  const auto coarse = ipf::minimize_gradient_descent(f, g, probe(5, 10, 3.0));
  ipf::DescentOptions fine;
  fine.tol = 1e-10;
  fine.max_iter = 5000;
  const auto tight = ipf::minimize_gradient_descent(f, g, probe(5, 10, 3.0), fine);
  EXPECT_TRUE(coarse.converged);
  EXPECT_LE(coarse.iterations, tight.iterations);
  EXPECT_LE(tight.phi, coarse.phi);
}

TEST(GradientDescent, IterationLimit) {
  const Quadratic q = random_quadratic(5, 11);
  auto f = [&](const Vector& x) { return q(x); };
  auto g = [&](const Vector& x) { return q.grad(x); };
  ipf::DescentOptions opts;
  opts.tol = 0.0;
  opts.max_iter = 2;
  const auto rec = ipf::minimize_gradient_descent(f, g, probe(5, 12, 3.0), opts);
  EXPECT_EQ(rec.status, ipf::MinimizeStatus::kIterationLimit);
  EXPECT_EQ(rec.iterations, 2);
  EXPECT_FALSE(rec.converged);
}

ipf::MinimumRecord exact_minimum(const Quadratic& q) {
  ipf::MinimumRecord rec;
  rec.mu = q.mu;
  rec.phi = q(q.mu);
  rec.converged = true;
  rec.status = ipf::MinimizeStatus::kConverged;
  return rec;
}

TEST(SolveLambda, ZeroDrawMapsToMinimum) {
  const Quadratic q = random_quadratic(3, 1);
  const auto s = ipf::solve_lambda(q, [&](const Vector& x) { return q.grad(x); }, exact_minimum(q), Vector::Zero(3));
  EXPECT_EQ(s.lambda, 0.0);
  EXPECT_EQ(s.X, q.mu);
  EXPECT_TRUE(s.ok);
}

TEST(SolveLambda, QuadraticHasAnalyticRoot) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 7);
    const Quadratic q = random_quadratic(n, seed);
    const Vector xi = probe(n, 100 + seed);
    const auto s = ipf::solve_lambda(q, [&](const Vector& x) { return q.grad(x); }, exact_minimum(q), xi);
    ASSERT_TRUE(s.ok);
    const double rho = xi.squaredNorm();
    const double curvature = s.eta.dot(q.a * s.eta);
    EXPECT_NEAR(s.eta.norm(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(s.rho, rho);
    EXPECT_NEAR(s.lambda, std::sqrt(rho / curvature), 1e-8 * s.lambda);
    EXPECT_NEAR(s.dlambda_drho, 1.0 / (2.0 * std::sqrt(rho * curvature)), 1e-6 * s.dlambda_drho);
    EXPECT_LT((s.X - (q.mu + s.lambda * s.eta)).norm(), 1e-14 * (1.0 + s.X.norm()));
    EXPECT_LE(std::abs(q(s.X) - q.phi - 0.5 * rho), 1e-3);
  }
}

TEST(SolveLambda, DiagonalScalingEntersTheDirection) {
  const Quadratic q = random_quadratic(4, 5);
  const Vector scaling = Vector::Constant(4, 0.5) + probe(4, 6).cwiseAbs();
  const Vector xi = probe(4, 7);
  const auto s =
      ipf::solve_lambda(q, [&](const Vector& x) { return q.grad(x); }, exact_minimum(q), xi, scaling);
  ASSERT_TRUE(s.ok);
  const Vector dir = scaling.cwiseProduct(s.eta);
  EXPECT_NEAR(s.lambda, std::sqrt(s.rho / dir.dot(q.a * dir)), 1e-8 * s.lambda);
  EXPECT_LT((s.X - q.mu - s.lambda * dir).norm(), 1e-12);
}

TEST(SolveLambda, NonQuadraticResidualWithinTolerance) {
  // Quartic bowl: the Newton iteration must still land on the level set.
  auto f = [](const Vector& x) { return 0.25 * x.array().pow(4).sum() + 0.5 * x.squaredNorm(); };
  auto g = [](const Vector& x) { return Vector(x.array().pow(3) + x.array()); };
  ipf::MinimumRecord rec;
  rec.mu = Vector::Zero(5);
  rec.phi = 0.0;
  rec.converged = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = ipf::solve_lambda(f, g, rec, probe(5, seed, 2.0));
    ASSERT_TRUE(s.ok);
    EXPECT_LE(std::abs(f(s.X) - rec.phi - 0.5 * s.rho), 1e-3);
    EXPECT_GT(s.lambda, 0.0);
  }
}

TEST(SolveLambda, UnreachableLevelFails) {
  // F is bounded by 1, so F - phi = rho / 2 has no root for large rho.
  auto f = [](const Vector& x) { return 1.0 - std::exp(-x.squaredNorm()); };
  auto g = [](const Vector& x) { return Vector(2.0 * std::exp(-x.squaredNorm()) * x); };
  ipf::MinimumRecord rec;
  rec.mu = Vector::Zero(2);
  rec.phi = 0.0;
  const auto s = ipf::solve_lambda(f, g, rec, Vector::Constant(2, 3.0));
  EXPECT_FALSE(s.ok);
  EXPECT_EQ(ipf::log_weight_increment(0.0, s, 0.0, 2), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(ipf::particle_weight(1.0, 0.0, s, 0.0, 2), 0.0);
}

TEST(ParticleWeight, OneDimensionalExponents) {
  ipf::MapSample s;
  s.rho = 2.25;
  s.lambda = 0.7;
  s.dlambda_drho = 0.3;
  s.ok = true;
  EXPECT_NEAR(ipf::particle_weight(1.0, 0.0, s, 0.0, 1), std::sqrt(2.25) * 0.3, 1e-15);
  EXPECT_NEAR(ipf::particle_weight(0.5, 1.0, s, std::log(2.0), 1), std::exp(-1.0) * std::sqrt(2.25) * 0.3, 1e-15);
}

TEST(ParticleWeight, GeneralFormula) {
  ipf::MapSample s;
  s.rho = 3.0;
  s.lambda = 1.4;
  s.dlambda_drho = 0.2;
  s.ok = true;
  const Index d = 6;
  const double expected = 0.25 * std::exp(-2.0) * 1.5 * std::pow(3.0, 1.0 - 3.0) * std::pow(1.4, 5.0) * 0.2;
  EXPECT_NEAR(ipf::particle_weight(0.25, 2.0, s, std::log(1.5), d), expected, 1e-14 * expected);
}

TEST(ParticleWeight, IdenticalParticlesShareWeight) {
  ipf::MapSample s;
  s.rho = 4.0;
  s.lambda = 2.0;
  s.dlambda_drho = 0.1;
  s.ok = true;
  const std::vector<double> log_w(7, ipf::log_weight_increment(3.0, s, 0.0, 4));
  for (const double w : ipf::normalize_log_weights(log_w)) {
    EXPECT_NEAR(w, 1.0 / 7.0, 1e-15);
  }
}

TEST(Weights, ConstantShiftCancels) {
  const std::vector<double> base{-1.0, 0.5, 2.0, -700.0, 3.0};
  std::vector<double> shifted = base;
  for (double& v : shifted) {
    v -= 1234.5;  // F + constant
  }
  const auto a = ipf::normalize_log_weights(base);
  const auto b = ipf::normalize_log_weights(shifted);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_NEAR(a[j], b[j], 1e-15);
  }
}

TEST(Weights, ZeroWeightsAreDivergence) {
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_THROW(ipf::normalize_log_weights(std::vector<double>{ninf, ninf}), ipf::FilterDivergence);
  const auto w = ipf::normalize_log_weights(std::vector<double>{ninf, 0.0});
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[1], 1.0);
}

TEST(EffectiveSampleSize, Examples) {
  EXPECT_DOUBLE_EQ(ipf::effective_sample_size(std::vector<double>(10, 0.1)), 10.0);
  EXPECT_DOUBLE_EQ(ipf::effective_sample_size(std::vector<double>{1.0, 0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(ipf::effective_sample_size(std::vector<double>{0.5, 0.5, 0.0, 0.0}), 2.0);
}

TEST(EffectiveSampleSize, RejectsUnnormalizedWeights) {
  EXPECT_THROW(ipf::effective_sample_size(std::vector<double>{0.5, 0.6}), ipf::InvalidArgument);
  EXPECT_THROW(ipf::effective_sample_size(std::vector<double>{1.5, -0.5}), ipf::InvalidArgument);
  EXPECT_THROW(ipf::effective_sample_size(std::vector<double>{}), ipf::InvalidArgument);
}

TEST(EffectiveSampleSize, BoundedByOneAndM) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Vector raw = probe(12, seed);
    std::vector<double> log_w(raw.data(), raw.data() + raw.size());
    for (double& v : log_w) {
      v *= 3.0;
    }
    const double ess = ipf::effective_sample_size(ipf::normalize_log_weights(log_w));
    EXPECT_GE(ess, 1.0 - 1e-12);
    EXPECT_LE(ess, 12.0 + 1e-12);
  }
}

}  // namespace
