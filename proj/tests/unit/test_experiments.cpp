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
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ipf/experiments/batch.hpp"
#include "ipf/experiments/config.hpp"
#include "ipf/experiments/convergence.hpp"
#include "ipf/experiments/io.hpp"
#include "ipf/experiments/twin.hpp"
#include "support/helpers.hpp"

namespace {

namespace ex = ipf::experiments;
using ipf::Vector;

ex::TwinConfig small_twin() {
  ex::TwinConfig cfg;
  cfg.geo.order = 16;
  cfg.geo.cutoff = 3;
  cfg.geo.nu = 0.05;
  cfg.horizon = 0.04;
  cfg.gap = 5;
  cfg.obs_k = 12;
  cfg.obs_lo = -1.0;
  cfg.particles = 4;
  cfg.obs_noise = 0.01;
  return cfg;
}

TEST(RelativeError, ScaleInvariant) {
  const Vector truth = ipf_test::probe(30, 1);
  const Vector est = truth + ipf_test::probe(30, 2, 0.1);
  const double base = ex::relative_error(truth, est);
  for (const double c : {-3.0, 1e-6, 250.0}) {
    EXPECT_NEAR(ex::relative_error(c * truth, c * est), base, 1e-14 * base);
  }
  EXPECT_EQ(ex::relative_error(truth, truth), 0.0);
  EXPECT_THROW(ex::relative_error(Vector::Zero(3), Vector::Ones(3)), ipf::InvalidArgument);
}

TEST(StepCount, WholeStepsOnly) {
  EXPECT_EQ(ex::step_count(0.2, 0.002), 100);
  EXPECT_EQ(ex::step_count(0.2, 0.2 / 1024), 1024);
  EXPECT_THROW(ex::step_count(0.2, 0.003), ipf::InvalidArgument);
  EXPECT_THROW(ex::step_count(0.001, 0.002), ipf::InvalidArgument);
}

TEST(FilterNames, RoundTrip) {
  for (const char* name : {"implicit", "simplified", "sir", "enkf", "perfect"}) {
    EXPECT_EQ(ex::filter_name(ex::parse_filter(name)), name);
  }
  EXPECT_EQ(ex::parse_filter("implicit_partial"), ex::FilterKind::kImplicit);
  EXPECT_THROW(ex::parse_filter("kalman"), ipf::InvalidArgument);
}

TEST(TwinExperiment, NoiselessRunFromTruthIsExact) {
  ex::TwinConfig cfg = small_twin();
  cfg.geo.g_u = 0.0;
  cfg.geo.g_b = 0.0;
  cfg.start_from_truth = true;
  const auto r = ex::twin_experiment(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_LT(r.e_u, 1e-14);
  EXPECT_LT(r.e_b, 1e-14);
  EXPECT_EQ(r.failed_particles, 0);
}

TEST(TwinExperiment, SameSeedSameResult) {
  const ex::TwinConfig cfg = small_twin();
  const auto a = ex::twin_experiment(cfg);
  const auto b = ex::twin_experiment(cfg);
  ASSERT_TRUE(a.ok) << a.error;
  EXPECT_EQ(a.e_u, b.e_u);
  EXPECT_EQ(a.e_b, b.e_b);
  EXPECT_EQ(a.truth_final.b, b.truth_final.b);
  ex::TwinConfig other = cfg;
  other.seed = 2;
  EXPECT_NE(ex::twin_experiment(other).e_b, a.e_b);
}

TEST(TwinExperiment, EveryFilterRuns) {
  for (const char* name : {"implicit", "simplified", "sir", "enkf", "perfect"}) {
    ex::TwinConfig cfg = small_twin();
    cfg.filter = ex::parse_filter(name);
    const auto r = ex::twin_experiment(cfg);
    ASSERT_TRUE(r.ok) << name << ": " << r.error;
    EXPECT_TRUE(std::isfinite(r.e_u));
    EXPECT_GE(r.e_b, 0.0);
    EXPECT_EQ(r.truth_final.b.size(), 15);
  }
}

TEST(TwinExperiment, AcceptedParticlesSolveTheMapEquation) {
  ex::TwinConfig cfg = small_twin();
  cfg.filter_options.scaling = ipf::MapScaling::kNoiseStd;
  const auto r = ex::twin_experiment(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.accepted_samples + r.failed_particles, cfg.particles * 4);
  EXPECT_LE(r.max_residual, 1e-3);
  // Observing b everywhere keeps the observed field close.
  EXPECT_LT(r.e_b, 0.1);
}

TEST(TwinExperiment, DeskScaleSolverIterationCounts) {
  // Default geomagnetic model, four steps between observations.
  ex::TwinConfig cfg;
  cfg.gap = 4;
  cfg.particles = 4;
  const auto r = ex::twin_experiment(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.failed_particles, 0);
  EXPECT_GE(r.mean_descent_iters, 4.0);
  EXPECT_LE(r.mean_descent_iters, 10.0);
  // The scalar solve reaches rounding level within a handful of Newton steps.
  EXPECT_GE(r.mean_newton_iters, 2.0);
  EXPECT_LE(r.mean_newton_iters, 10.0);
  EXPECT_LE(r.max_residual, 1e-3);
}

TEST(TwinExperiment, RejectsBadConfig) {
  ex::TwinConfig cfg = small_twin();
  cfg.particles = 0;
  EXPECT_THROW(ex::twin_experiment(cfg), ipf::InvalidArgument);
  cfg = small_twin();
  cfg.horizon = 0.041;
  EXPECT_THROW(ex::twin_experiment(cfg), ipf::InvalidArgument);
}

TEST(Moments, PopulationVariance) {
  const std::vector<double> v{1.0, 2.0, 3.0, 6.0};
  const auto m = ex::moments(v);
  EXPECT_DOUBLE_EQ(m.mean, 3.0);
  EXPECT_DOUBLE_EQ(m.variance, 3.5);
  EXPECT_EQ(ex::moments(std::vector<double>{4.2}).variance, 0.0);
}

TEST(Histogram, CountsCoverEveryValue) {
  const std::vector<double> v{0.0, 0.05, 0.1, 0.3, 0.99, 1.0};
  const auto h = ex::make_histogram(v, 4);
  ASSERT_EQ(h.edges.size(), 5U);
  EXPECT_EQ(h.edges.back(), 1.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{3, 1, 0, 2}));
  EXPECT_THROW(ex::make_histogram(v, 0), ipf::InvalidArgument);
}

TEST(Batch, SingleRunHasZeroVariance) {
  const ex::TwinConfig cfg = small_twin();
  const auto s = ex::run_batch(cfg, 1);
  ASSERT_EQ(s.run_count, 1U);
  const auto single = ex::twin_experiment(cfg);
  EXPECT_EQ(s.e_u.mean, single.e_u);
  EXPECT_EQ(s.e_b.mean, single.e_b);
  EXPECT_EQ(s.e_u.variance, 0.0);
  EXPECT_EQ(s.e_b.variance, 0.0);
}

TEST(Batch, CsvRowsReproduceTheSummary) {
  const ex::TwinConfig cfg = small_twin();
  const auto s = ex::run_batch(cfg, 6);
  ASSERT_EQ(s.run_count, 6U);
  std::ostringstream csv;
  ex::write_runs_csv(csv, s.runs);
  const nlohmann::json summary = nlohmann::json::parse(ex::summary_json(s).dump());

  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, ex::kRunCsvHeader);
  std::vector<double> eu;
  std::vector<double> eb;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      cells.push_back(cell);
    }
    ASSERT_EQ(cells.size(), 8U);
    eu.push_back(std::stod(cells[5]));
    eb.push_back(std::stod(cells[6]));
  }
  ASSERT_EQ(eu.size(), 6U);
  auto check = [](const std::vector<double>& v, const nlohmann::json& j) {
    double mean = 0.0;
    for (const double x : v) {
      mean += x;
    }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) {
      var += (x - mean) * (x - mean);
    }
    var /= static_cast<double>(v.size());
    EXPECT_NEAR(j.at("mean").get<double>(), mean, 1e-12);
    EXPECT_NEAR(j.at("variance").get<double>(), var, 1e-12);
    std::size_t total = 0;
    for (const auto& c : j.at("histogram").at("counts")) {
      total += c.get<std::size_t>();
    }
    EXPECT_EQ(total, v.size());
  };
  check(eu, summary.at("e_u"));
  check(eb, summary.at("e_b"));
  EXPECT_EQ(summary.at("runs").get<int>(), 6);
}

TEST(Batch, WorkerCountDoesNotChangeResults) {
  const ex::TwinConfig cfg = small_twin();
  const auto one = ex::run_batch(cfg, 4, nullptr, 1);
  const auto two = ex::run_batch(cfg, 4, nullptr, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(one.runs[i].seed, two.runs[i].seed);
    EXPECT_EQ(one.runs[i].e_b, two.runs[i].e_b);
  }
  EXPECT_THROW(ex::run_batch(cfg, 0), ipf::InvalidArgument);
}

TEST(Config, ParsesEverySection) {
  const auto j = nlohmann::json::parse(R"({
    "geomag": {"N": 40, "delta": 0.004, "nu": 0.01, "g_u": 0.02, "g_b": 2, "cutoff": 5, "T": 0.4},
    "obs": {"k": 50, "noise": 0.002, "r": 4, "interval": [-1, 1]},
    "filter": {"name": "enkf", "M": 30, "tol": 0.05, "max_iter": 50, "resample_threshold": 0.5,
               "seed": 9, "scaling": "noise_std", "gradient": "forward"},
    "batch": {"runs": 7},
    "convergence": {"reps": 3, "resolutions": [10, 20], "reference": 40}
  })");
  const ex::RunConfig rc = ex::parse_config(j);
  const auto& t = rc.twin;
  EXPECT_EQ(t.geo.order, 40);
  EXPECT_EQ(t.geo.delta, 0.004);
  EXPECT_EQ(t.geo.nu, 0.01);
  EXPECT_EQ(t.geo.g_u, 0.02);
  EXPECT_EQ(t.geo.g_b, 2.0);
  EXPECT_EQ(t.geo.cutoff, 5);
  EXPECT_EQ(t.horizon, 0.4);
  EXPECT_EQ(t.obs_k, 50);
  EXPECT_EQ(t.obs_noise, 0.002);
  EXPECT_EQ(t.gap, 4);
  EXPECT_EQ(t.obs_lo, -1.0);
  EXPECT_EQ(t.obs_hi, 1.0);
  EXPECT_EQ(t.filter, ex::FilterKind::kEnkf);
  EXPECT_EQ(t.particles, 30);
  EXPECT_EQ(t.filter_options.descent.tol, 0.05);
  EXPECT_EQ(t.filter_options.descent.max_iter, 50);
  EXPECT_EQ(t.filter_options.resample_threshold, 0.5);
  EXPECT_EQ(t.seed, 9U);
  EXPECT_EQ(t.filter_options.scaling, ipf::MapScaling::kNoiseStd);
  EXPECT_EQ(t.filter_options.gradient, ipf::GradientMode::kForward);
  EXPECT_EQ(rc.runs, 7);
  const auto conv = ex::convergence_config(rc, ex::ConvergenceKind::kSpace);
  EXPECT_EQ(conv.reps, 3);
  EXPECT_EQ(conv.resolutions, (std::vector<int>{10, 20}));
  EXPECT_EQ(conv.reference, 40);
}

TEST(Config, DefaultsAndErrors) {
  const ex::RunConfig rc = ex::parse_config(nlohmann::json::object());
  EXPECT_EQ(rc.twin.geo.order, 100);
  EXPECT_EQ(rc.twin.obs_k, 200);
  EXPECT_EQ(rc.twin.gap, 10);
  EXPECT_EQ(rc.runs, 20);
  EXPECT_THROW(ex::parse_config(nlohmann::json::array()), ipf::InvalidArgument);
  EXPECT_THROW(ex::parse_config(nlohmann::json::parse(R"({"obs": {"interval": [0]}})")), ipf::InvalidArgument);
  EXPECT_THROW(ex::parse_config(nlohmann::json::parse(R"({"filter": {"name": "nope"}})")), ipf::InvalidArgument);
  EXPECT_THROW(ex::load_config("/nonexistent/config.json"), ipf::InvalidArgument);
  const auto path = std::filesystem::temp_directory_path() / "ipf_bad_config.json";
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(ex::load_config(path.string()), ipf::InvalidArgument);
  std::filesystem::remove(path);
}

TEST(Convergence, ReferenceResolutionHasZeroError) {
  ex::ConvergenceConfig cfg;
  cfg.geo.order = 16;
  cfg.geo.cutoff = 3;
  cfg.horizon = 0.02;
  cfg.reps = 2;
  cfg.resolutions = {12, 16};
  cfg.reference = 16;
  const auto space = ex::convergence_study(ex::ConvergenceKind::kSpace, cfg);
  ASSERT_EQ(space.size(), 2U);
  EXPECT_GT(space[0].mean_error, 0.0);
  EXPECT_EQ(space[1].mean_error, 0.0);

  cfg.resolutions = {5, 10};
  cfg.reference = 10;
  const auto time = ex::convergence_study(ex::ConvergenceKind::kTime, cfg);
  ASSERT_EQ(time.size(), 2U);
  EXPECT_GT(time[0].mean_error, 0.0);
  EXPECT_NEAR(time[1].mean_error, 0.0, 1e-14);
  EXPECT_DOUBLE_EQ(time[1].resolution, 0.002);
}

TEST(Convergence, SlopeOfAPowerLaw) {
  std::vector<ex::ConvergenceRow> rows;
  for (const double h : {0.1, 0.05, 0.025, 0.0125}) {
    rows.push_back({h, 3.0 * h * h});
  }
  EXPECT_NEAR(ex::loglog_slope(rows), 2.0, 1e-12);
}

TEST(Output, StateCsvHasBoundaryValues) {
  ex::TwinConfig cfg = small_twin();
  const ipf::geomag::GeoModel geo(cfg.geo);
  std::ostringstream os;
  ex::write_state_csv(os, geo, geo.mean_initial_state());
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,u,b");
  std::getline(in, line);
  EXPECT_EQ(line, "-1,0,-1");
  std::size_t count = 1;
  std::string last;
  while (std::getline(in, line)) {
    last = line;
    ++count;
  }
  EXPECT_EQ(count, 17U);
  EXPECT_EQ(last, "1,0,1");
}

}  // namespace
