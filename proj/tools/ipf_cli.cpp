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

// Command-line driver for twin experiments, batches, and convergence studies.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipf/experiments/batch.hpp"
#include "ipf/experiments/config.hpp"
#include "ipf/experiments/convergence.hpp"
#include "ipf/experiments/io.hpp"
#include "ipf/experiments/twin.hpp"

namespace {

namespace ex = ipf::experiments;

constexpr int kUsageError = 2;
constexpr int kRunError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config;
  std::optional<std::string> filter;
  std::optional<int> particles;
  std::optional<int> gap;
  std::optional<int> obs_k;
  std::optional<std::uint64_t> seed;
  std::vector<double> interval;
  std::optional<std::string> scaling;
  std::string out;
  std::optional<int> runs;
  int jobs = 1;
  bool timing = false;
  std::string kind = "time";
  std::string snapshot;
  std::string log;
  int baseline_particles = 100;
};

ex::RunConfig resolve(const Overrides& o) {
  ex::RunConfig rc;
  if (!o.config.empty()) {
    try {
      rc = ex::load_config(o.config);
    } catch (const ipf::InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  auto& t = rc.twin;
  try {
    if (o.filter) {
      t.filter = ex::parse_filter(*o.filter);
    }
    if (o.scaling) {
      t.filter_options.scaling = ipf::experiments::detail::parse_scaling(*o.scaling);
    }
  } catch (const ipf::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (o.particles) {
    t.particles = *o.particles;
  }
  if (o.gap) {
    t.gap = *o.gap;
  }
  if (o.obs_k) {
    t.obs_k = *o.obs_k;
  }
  if (o.seed) {
    t.seed = *o.seed;
  }
  if (!o.interval.empty()) {
    t.obs_lo = o.interval[0];
    t.obs_hi = o.interval[1];
  }
  if (o.runs) {
    rc.runs = *o.runs;
  }
  return rc;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw UsageError("cannot write output file '" + path + "'");
  }
  return out;
}

void note_interval(const ex::TwinConfig& t) {
  std::cerr << "observing b at " << t.obs_k << " points on [" << t.obs_lo << ", " << t.obs_hi << "]\n";
}

void clear_timing(std::vector<ex::TwinResult>& runs, bool timing) {
  if (!timing) {
    for (auto& r : runs) {
      r.wall_ms = 0.0;
    }
  }
}

int run_twin(const Overrides& o) {
  ex::RunConfig rc = resolve(o);
  std::optional<std::ofstream> out;
  if (!o.out.empty()) {
    out = open_output(o.out);
  }
  std::optional<std::ofstream> log_file;
  std::unique_ptr<ipf::DiagnosticsLog> log;
  if (!o.log.empty()) {
    log_file = open_output(o.log);
    log = std::make_unique<ipf::DiagnosticsLog>(*log_file, rc.twin.filter == ex::FilterKind::kImplicit ||
                                                               rc.twin.filter == ex::FilterKind::kPerfect);
    rc.twin.filter_options.log = log.get();
  }
  note_interval(rc.twin);
  const auto geo = std::make_shared<const ipf::geomag::GeoModel>(rc.twin.geo);
  std::vector<ex::TwinResult> runs{ex::twin_experiment(rc.twin, geo)};
  clear_timing(runs, o.timing);
  std::ostream& os = out ? static_cast<std::ostream&>(*out) : std::cout;
  ex::write_runs_csv(os, runs);
  if (!o.snapshot.empty()) {
    auto truth = open_output(o.snapshot + ".truth.csv");
    auto estimate = open_output(o.snapshot + ".estimate.csv");
    ex::write_state_csv(truth, *geo, runs.front().truth_final);
    ex::write_state_csv(estimate, *geo, runs.front().estimate_final);
  }
  if (!runs.front().ok) {
    std::cerr << "run failed: " << runs.front().error << '\n';
    return kRunError;
  }
  return 0;
}

int run_batch(const Overrides& o) {
  const ex::RunConfig rc = resolve(o);
  std::optional<std::ofstream> csv;
  std::optional<std::ofstream> json;
  if (!o.out.empty()) {
    csv = open_output(o.out + ".csv");
    json = open_output(o.out + ".json");
  }
  note_interval(rc.twin);
  ex::BatchSummary s = ex::run_batch(rc.twin, rc.runs, nullptr, o.jobs);
  clear_timing(s.runs, o.timing);
  const std::string summary = ex::summary_json(s).dump(2) + "\n";
  if (csv) {
    ex::write_runs_csv(*csv, s.runs);
    *json << summary;
  } else {
    std::cout << summary;
  }
  return s.run_count > 0 ? 0 : kRunError;
}

int run_converge(const Overrides& o) {
  const ex::RunConfig rc = resolve(o);
  ex::ConvergenceKind kind{};
  try {
    kind = ex::parse_convergence_kind(o.kind);
  } catch (const ipf::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::optional<std::ofstream> out;
  if (!o.out.empty()) {
    out = open_output(o.out);
  }
  const auto rows = ex::convergence_study(kind, ex::convergence_config(rc, kind));
  std::ostream& os = out ? static_cast<std::ostream&>(*out) : std::cout;
  ex::write_convergence_csv(os, kind, rows);
  std::cerr << "log-log slope " << ex::loglog_slope(rows) << '\n';
  return 0;
}

int run_compare(const Overrides& o) {
  const ex::RunConfig rc = resolve(o);
  std::optional<std::ofstream> out;
  if (!o.out.empty()) {
    out = open_output(o.out);
  }
  note_interval(rc.twin);
  const auto geo = std::make_shared<const ipf::geomag::GeoModel>(rc.twin.geo);
  const std::pair<ex::FilterKind, int> lineup[] = {
      {ex::FilterKind::kImplicit, static_cast<int>(rc.twin.particles)},
      {ex::FilterKind::kSimplified, static_cast<int>(rc.twin.particles)},
      {ex::FilterKind::kEnkf, o.baseline_particles},
      {ex::FilterKind::kSir, o.baseline_particles},
  };
  std::vector<ex::TwinResult> all;
  std::ostringstream table;
  table << std::setprecision(17) << "filter,M,runs,failures,mean_e_u,var_e_u,mean_e_b,var_e_b\n";
  for (const auto& [kind, m] : lineup) {
    ex::TwinConfig cfg = rc.twin;
    cfg.filter = kind;
    cfg.particles = m;
    ex::BatchSummary s = ex::run_batch(cfg, rc.runs, geo, o.jobs);
    clear_timing(s.runs, o.timing);
    table << ex::filter_name(kind) << ',' << m << ',' << s.run_count << ',' << s.failures << ',' << s.e_u.mean << ','
          << s.e_u.variance << ',' << s.e_b.mean << ',' << s.e_b.variance << '\n';
    all.insert(all.end(), s.runs.begin(), s.runs.end());
  }
  std::cout << table.str();
  if (out) {
    ex::write_runs_csv(*out, all);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit particle filter experiments"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--filter", o.filter, "implicit | implicit_partial | simplified | perfect | sir | enkf");
    sub->add_option("--particles", o.particles, "ensemble size M")->check(CLI::PositiveNumber);
    sub->add_option("--gap", o.gap, "model steps between observations r")->check(CLI::PositiveNumber);
    sub->add_option("--obs-k", o.obs_k, "number of observation locations k")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--interval", o.interval, "observation interval lo hi")->expected(2);
    sub->add_option("--scaling", o.scaling, "random map scaling: identity | noise_std");
    sub->add_option("--out", o.out, "output path");
    sub->add_flag("--timing", o.timing, "record wall-clock time per run (otherwise 0)");
  };

  auto* twin = app.add_subcommand("twin", "one twin experiment, CSV row");
  common(twin);
  twin->add_option("--snapshot", o.snapshot, "write PREFIX.truth.csv and PREFIX.estimate.csv");
  twin->add_option("--log", o.log, "per-particle diagnostics CSV");

  auto* batch = app.add_subcommand("batch", "independent twin experiments, summary JSON");
  common(batch);
  batch->add_option("--runs", o.runs, "number of runs")->check(CLI::PositiveNumber);
  batch->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* converge = app.add_subcommand("converge", "space or time convergence table");
  common(converge);
  converge->add_option("--kind", o.kind, "space | time");

  auto* compare = app.add_subcommand("filter-compare", "all filters on the same seeds");
  common(compare);
  compare->add_option("--runs", o.runs, "number of runs")->check(CLI::PositiveNumber);
  compare->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  compare->add_option("--baseline-particles", o.baseline_particles, "ensemble size for SIR and EnKF")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*twin) {
      return run_twin(o);
    }
    if (*batch) {
      return run_batch(o);
    }
    if (*converge) {
      return run_converge(o);
    }
    return run_compare(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunError;
  }
}
