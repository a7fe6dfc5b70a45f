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

#ifndef IPF_EXPERIMENTS_BATCH_HPP
#define IPF_EXPERIMENTS_BATCH_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "ipf/core/errors.hpp"
#include "ipf/experiments/twin.hpp"

namespace ipf::experiments {

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<std::size_t> counts;
};

/// Equal-width bins on [0, max]; the top edge is inclusive.
inline Histogram make_histogram(std::span<const double> values, std::size_t bins = 10) {
  require(bins >= 1, "histogram needs at least one bin");
  Histogram h;
  const double top = values.empty() ? 1.0 : std::max(*std::max_element(values.begin(), values.end()), 1e-300);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = top * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (const double v : values) {
    auto bin = static_cast<std::size_t>(v / top * static_cast<double>(bins));
    h.counts[std::min(bin, bins - 1)]++;
  }
  return h;
}

struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

inline MomentPair moments(std::span<const double> values) {
  MomentPair m;
  if (values.empty()) {
    return m;
  }
  for (const double v : values) {
    m.mean += v;
  }
  m.mean /= static_cast<double>(values.size());
  for (const double v : values) {
    m.variance += (v - m.mean) * (v - m.mean);
  }
  m.variance /= static_cast<double>(values.size());
  return m;
}

struct BatchSummary {
  std::vector<TwinResult> runs;
  std::size_t run_count = 0;  // successful runs
  std::size_t failures = 0;
  MomentPair e_u;
  MomentPair e_b;
  Histogram hist_u;
  Histogram hist_b;
};

inline BatchSummary summarize(std::vector<TwinResult> runs, std::size_t bins = 10) {
  BatchSummary s;
  std::vector<double> eu;
  std::vector<double> eb;
  for (const auto& r : runs) {
    if (r.ok) {
      eu.push_back(r.e_u);
      eb.push_back(r.e_b);
    } else {
      ++s.failures;
    }
  }
  s.run_count = eu.size();
  s.e_u = moments(eu);
  s.e_b = moments(eb);
  s.hist_u = make_histogram(eu, bins);
  s.hist_b = make_histogram(eb, bins);
  s.runs = std::move(runs);
  return s;
}

/// `n_runs` twin experiments with seeds cfg.seed, cfg.seed + 1, ... Runs are
/// spread over `jobs` threads; results do not depend on the thread count.
inline BatchSummary run_batch(const TwinConfig& cfg, int n_runs, std::shared_ptr<const geomag::GeoModel> geo = nullptr,
                              int jobs = 1) {
  require(n_runs >= 1, "a batch needs at least one run");
  require(jobs >= 1, "need at least one worker");
  require(jobs == 1 || cfg.filter_options.log == nullptr, "diagnostics logging needs a single worker");
  if (!geo) {
    geo = std::make_shared<const geomag::GeoModel>(cfg.geo);
  }
  std::vector<TwinResult> runs(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      for (int i = next++; i < n_runs; i = next++) {
        TwinConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
        runs[static_cast<std::size_t>(i)] = twin_experiment(run_cfg, geo);
      }
    } catch (...) {
      const std::lock_guard lock(error_mutex);
      if (!first_error) {
        first_error = std::current_exception();
      }
      next = n_runs;
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < std::min(jobs, n_runs); ++t) {
      pool.emplace_back(worker);
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
  return summarize(std::move(runs));
}

}  // namespace ipf::experiments

#endif  // IPF_EXPERIMENTS_BATCH_HPP
