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

#ifndef IPF_EXPERIMENTS_CONFIG_HPP
#define IPF_EXPERIMENTS_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ipf/core/errors.hpp"
#include "ipf/core/heat_model.hpp"
#include "ipf/experiments/convergence.hpp"
#include "ipf/experiments/twin.hpp"

namespace ipf::experiments {

// Recognized layout (every key optional):
//
//   {
//     "geomag": {"N": 100, "delta": 0.002, "nu": 0.001, "g_u": 0.01, "g_b": 1.0,
//                "cutoff": 10, "T": 0.2, "eig_threshold": 1e-10, "advection": true},
//     "obs":    {"k": 200, "interval": [0, 1], "noise": 0.001, "r": 10},
//     "filter": {"name": "implicit", "M": 10, "tol": 0.1, "max_iter": 200,
//                "resample_threshold": 0.9, "seed": 1, "scaling": "identity",
//                "gradient": "adjoint", "start_from_truth": false},
//     "batch":  {"runs": 20},
//     "convergence": {"reps": 20, "resolutions": [64, 128, 256], "reference": 1024},
//     "heat":   {"m": 10, "c": 10, "dt": 0.001, "r": 1, "source": "zero", "source_scale": 1.0,
//                "obs_std": 0.1}
//   }

struct RunConfig {
  TwinConfig twin;
  int runs = 20;
  int convergence_reps = 20;
  std::vector<int> convergence_resolutions;  // empty selects the per-kind defaults
  int convergence_reference = 0;
  HeatModelOptions heat;
  std::uint64_t heat_seed = 1;
};

namespace detail {

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
    }
  }
}

inline MapScaling parse_scaling(const std::string& name) {
  if (name == "identity") {
    return MapScaling::kIdentity;
  }
  if (name == "noise_std") {
    return MapScaling::kNoiseStd;
  }
  throw InvalidArgument("unknown scaling '" + name + "'");
}

inline GradientMode parse_gradient(const std::string& name) {
  if (name == "adjoint") {
    return GradientMode::kAdjoint;
  }
  if (name == "forward") {
    return GradientMode::kForward;
  }
  throw InvalidArgument("unknown gradient mode '" + name + "'");
}

inline SourceTerm parse_source(const std::string& name, double scale) {
  if (name == "zero") {
    return zero_source();
  }
  if (name == "cubic") {
    return cubic_source(scale);
  }
  if (name == "sine") {
    return sine_source(scale);
  }
  throw InvalidArgument("unknown source term '" + name + "'");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  require(j.is_object(), "config must be a JSON object");
  RunConfig rc;
  TwinConfig& t = rc.twin;
  using detail::read_into;

  if (j.contains("geomag")) {
    const auto& g = j.at("geomag");
    read_into(g, "N", t.geo.order);
    read_into(g, "delta", t.geo.delta);
    read_into(g, "nu", t.geo.nu);
    read_into(g, "g_u", t.geo.g_u);
    read_into(g, "g_b", t.geo.g_b);
    read_into(g, "cutoff", t.geo.cutoff);
    read_into(g, "T", t.horizon);
    read_into(g, "eig_threshold", t.geo.eig_threshold);
    read_into(g, "advection", t.geo.advection);
  }
  if (j.contains("obs")) {
    const auto& o = j.at("obs");
    read_into(o, "k", t.obs_k);
    read_into(o, "noise", t.obs_noise);
    read_into(o, "r", t.gap);
    if (o.contains("interval")) {
      const auto iv = o.at("interval");
      require(iv.is_array() && iv.size() == 2, "obs.interval must be [lo, hi]");
      t.obs_lo = iv[0].get<double>();
      t.obs_hi = iv[1].get<double>();
    }
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    std::string name;
    read_into(f, "name", name);
    if (!name.empty()) {
      t.filter = parse_filter(name);
    }
    read_into(f, "M", t.particles);
    read_into(f, "tol", t.filter_options.descent.tol);
    read_into(f, "max_iter", t.filter_options.descent.max_iter);
    read_into(f, "resample_threshold", t.filter_options.resample_threshold);
    read_into(f, "seed", t.seed);
    read_into(f, "start_from_truth", t.start_from_truth);
    std::string scaling;
    read_into(f, "scaling", scaling);
    if (!scaling.empty()) {
      t.filter_options.scaling = detail::parse_scaling(scaling);
    }
    std::string gradient;
    read_into(f, "gradient", gradient);
    if (!gradient.empty()) {
      t.filter_options.gradient = detail::parse_gradient(gradient);
    }
  }
  if (j.contains("batch")) {
    read_into(j.at("batch"), "runs", rc.runs);
  }
  if (j.contains("convergence")) {
    const auto& c = j.at("convergence");
    read_into(c, "reps", rc.convergence_reps);
    read_into(c, "resolutions", rc.convergence_resolutions);
    read_into(c, "reference", rc.convergence_reference);
  }
  if (j.contains("heat")) {
    const auto& h = j.at("heat");
    read_into(h, "m", rc.heat.modes);
    read_into(h, "c", rc.heat.forced_modes);
    read_into(h, "dt", rc.heat.dt);
    read_into(h, "r", rc.heat.gap);
    read_into(h, "obs_std", rc.heat.obs_std);
    read_into(h, "seed", rc.heat_seed);
    std::string source = "zero";
    double scale = 1.0;
    read_into(h, "source", source);
    read_into(h, "source_scale", scale);
    rc.heat.source = detail::parse_source(source, scale);
  }
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidArgument("cannot read config file '" + path + "'");
  }
  try {
    return parse_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline ConvergenceConfig convergence_config(const RunConfig& rc, ConvergenceKind kind) {
  ConvergenceConfig c =
      kind == ConvergenceKind::kSpace ? ConvergenceConfig::space_defaults() : ConvergenceConfig::time_defaults();
  c.geo = rc.twin.geo;
  c.horizon = rc.twin.horizon;
  c.seed = rc.twin.seed;
  c.reps = rc.convergence_reps;
  if (!rc.convergence_resolutions.empty()) {
    c.resolutions = rc.convergence_resolutions;
  }
  if (rc.convergence_reference > 0) {
    c.reference = rc.convergence_reference;
  }
  return c;
}

}  // namespace ipf::experiments

#endif  // IPF_EXPERIMENTS_CONFIG_HPP
