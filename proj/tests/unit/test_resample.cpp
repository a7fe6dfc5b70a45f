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
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "ipf/filters/resample.hpp"
#include "ipf/filters/weights.hpp"
#include "support/helpers.hpp"

namespace {

using ipf::Vector;

std::vector<double> random_weights(std::size_t m, std::uint64_t seed) {
  const Vector raw = ipf_test::probe(static_cast<ipf::Index>(m), seed, 2.0);
  return ipf::normalize_log_weights(std::vector<double>(raw.data(), raw.data() + raw.size()));
}

TEST(SystematicResampling, UniformWeightsKeepEveryParticle) {
  const std::vector<double> w(8, 0.125);
  for (const double u0 : {0.0, 0.3, 0.999}) {
    const auto idx = ipf::systematic_indices(w, u0);
    const auto counts = ipf::offspring_counts(idx, 8);
    for (const auto c : counts) {
      EXPECT_EQ(c, 1U);
    }
  }
}

TEST(SystematicResampling, DegenerateWeightsCopyOneParticle) {
  std::vector<double> w(6, 0.0);
  w[0] = 1.0;
  ipf::Rng rng = ipf::make_stream(1, ipf::Stream::kTest);
  const auto idx = ipf::systematic_indices(w, rng);
  for (const auto i : idx) {
    EXPECT_EQ(i, 0U);
  }
}

TEST(SystematicResampling, SeventyThirtySplit) {
  std::vector<double> w(10, 0.3 / 9.0);
  w[0] = 0.7;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ipf::Rng rng = ipf::make_stream(seed, ipf::Stream::kTest);
    const auto counts = ipf::offspring_counts(ipf::systematic_indices(w, rng), 10);
    EXPECT_GE(counts[0], 6U);
    EXPECT_LE(counts[0], 8U);
  }
}

TEST(SystematicResampling, CountsStayWithinFloorAndCeiling) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const std::size_t m = 2 + seed % 30;
    const auto w = random_weights(m, seed);
    ipf::Rng rng = ipf::make_stream(seed, ipf::Stream::kResample);
    const auto counts = ipf::offspring_counts(ipf::systematic_indices(w, rng), m);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), m);
    for (std::size_t j = 0; j < m; ++j) {
      const double expected = static_cast<double>(m) * w[j];
      EXPECT_GE(static_cast<double>(counts[j]), std::floor(expected - 1e-9));
      EXPECT_LE(static_cast<double>(counts[j]), std::ceil(expected + 1e-9));
    }
  }
}

TEST(SystematicResampling, MeanOffspringMatchesWeights) {
  const auto w = random_weights(5, 77);
  std::vector<double> total(5, 0.0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    ipf::Rng rng = ipf::make_stream(9, ipf::Stream::kResample, static_cast<std::uint64_t>(t));
    const auto counts = ipf::offspring_counts(ipf::systematic_indices(w, rng), 5);
    for (std::size_t j = 0; j < 5; ++j) {
      total[j] += static_cast<double>(counts[j]);
    }
  }
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_NEAR(total[j] / trials, 5.0 * w[j], 0.02);
  }
}

TEST(SystematicResampling, RejectsBadInput) {
  EXPECT_THROW(ipf::systematic_indices(std::vector<double>{0.5, 0.5}, 1.0), ipf::InvalidArgument);
  EXPECT_THROW(ipf::systematic_indices(std::vector<double>{0.5, 0.6}, 0.1), ipf::InvalidArgument);
  EXPECT_THROW(ipf::offspring_counts(std::vector<std::size_t>{3}, 2), ipf::InvalidArgument);
}

TEST(SystematicResampling, EnsembleGetsUniformWeights) {
  std::vector<Vector> xs;
  for (int j = 0; j < 6; ++j) {
    xs.push_back(Vector::Constant(2, j));
  }
  ipf::Ensemble ens = ipf::make_ensemble(xs);
  ens.time = 7;
  const auto w = random_weights(6, 3);
  for (std::size_t j = 0; j < 6; ++j) {
    ens.particles[j].weight = w[j];
  }
  ipf::Rng rng = ipf::make_stream(4, ipf::Stream::kResample);
  const ipf::Ensemble out = ipf::resample_systematic(ens, rng);
  ASSERT_EQ(out.size(), 6U);
  EXPECT_EQ(out.time, 7);
  for (const auto& p : out.particles) {
    EXPECT_DOUBLE_EQ(p.weight, 1.0 / 6.0);
    EXPECT_EQ(p.x[0], p.x[1]);
  }
}

}  // namespace
