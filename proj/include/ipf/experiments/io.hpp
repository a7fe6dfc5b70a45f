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

#ifndef IPF_EXPERIMENTS_IO_HPP
#define IPF_EXPERIMENTS_IO_HPP

#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "ipf/experiments/batch.hpp"
#include "ipf/experiments/convergence.hpp"
#include "ipf/experiments/twin.hpp"
#include "ipf/geomag/geomag_model.hpp"

namespace ipf::experiments {

inline constexpr const char* kRunCsvHeader = "seed,filter,M,r,k,e_u,e_b,wall_ms";

namespace detail {

/// Restores the stream format on scope exit.
class PreciseStream {
 public:
  explicit PreciseStream(std::ostream& os) : os_(os), flags_(os.flags()), precision_(os.precision()) {
    os_ << std::setprecision(std::numeric_limits<double>::max_digits10);
    os_.unsetf(std::ios::floatfield);
  }
  ~PreciseStream() {
    os_.flags(flags_);
    os_.precision(precision_);
  }
  PreciseStream(const PreciseStream&) = delete;
  PreciseStream& operator=(const PreciseStream&) = delete;

 private:
  std::ostream& os_;
  std::ios::fmtflags flags_;
  std::streamsize precision_;
};

}  // namespace detail

inline void write_run_row(std::ostream& os, const TwinResult& r) {
  const detail::PreciseStream guard(os);
  os << r.seed << ',' << filter_name(r.filter) << ',' << r.particles << ',' << r.gap << ',' << r.obs_k << ',';
  if (r.ok) {
    os << r.e_u << ',' << r.e_b;
  } else {
    os << "nan,nan";
  }
  os << ',' << r.wall_ms << '\n';
}

inline void write_runs_csv(std::ostream& os, const std::vector<TwinResult>& runs) {
  os << kRunCsvHeader << '\n';
  for (const auto& r : runs) {
    write_run_row(os, r);
  }
}

inline nlohmann::json histogram_json(const Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}};
}

inline nlohmann::json summary_json(const BatchSummary& s) {
  nlohmann::json j;
  j["runs"] = s.run_count;
  j["failures"] = s.failures;
  j["e_u"] = {{"mean", s.e_u.mean}, {"variance", s.e_u.variance}, {"histogram", histogram_json(s.hist_u)}};
  j["e_b"] = {{"mean", s.e_b.mean}, {"variance", s.e_b.variance}, {"histogram", histogram_json(s.hist_b)}};
  if (!s.runs.empty()) {
    const auto& r = s.runs.front();
    j["filter"] = filter_name(r.filter);
    j["M"] = r.particles;
    j["r"] = r.gap;
    j["k"] = r.obs_k;
  }
  return j;
}

inline void write_convergence_csv(std::ostream& os, ConvergenceKind kind, const std::vector<ConvergenceRow>& rows) {
  const detail::PreciseStream guard(os);
  os << (kind == ConvergenceKind::kSpace ? "N" : "delta") << ",mean_error\n";
  for (const auto& r : rows) {
    os << r.resolution << ',' << r.mean_error << '\n';
  }
}

/// Nodal values on all GLL nodes, boundaries included.
inline void write_state_csv(std::ostream& os, const geomag::GeoModel& geo, const geomag::GeoState& s) {
  const detail::PreciseStream guard(os);
  const Vector u = geomag::GeoModel::full_u(s.u);
  const Vector b = geomag::GeoModel::full_b(s.b);
  const Vector& x = geo.ops().nodes;
  os << "x,u,b\n";
  for (Index i = 0; i < x.size(); ++i) {
    os << x[i] << ',' << u[i] << ',' << b[i] << '\n';
  }
}

}  // namespace ipf::experiments

#endif  // IPF_EXPERIMENTS_IO_HPP
