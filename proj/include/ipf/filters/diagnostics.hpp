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

#ifndef IPF_FILTERS_DIAGNOSTICS_HPP
#define IPF_FILTERS_DIAGNOSTICS_HPP

#include <iomanip>
#include <ostream>
#include <span>

#include "ipf/core/linalg.hpp"

namespace ipf {

/// Per-particle record of one assimilation step.
struct ParticleDiagnostics {
  Index step = 0;
  Index particle = 0;
  double phi = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  int iters = 0;
  int newton_iters = 0;
  double residual = 0.0;
  double weight = 0.0;
  Index dim = 0;
  bool failed = false;
};

/// Appends rows `step,particle,phi,rho,lambda,iters,weight[,p]` to a stream.
class DiagnosticsLog {
 public:
  explicit DiagnosticsLog(std::ostream& out, bool with_dimension = false)
      : out_(out), with_dimension_(with_dimension) {}

  void write(std::span<const ParticleDiagnostics> rows) {
    if (!header_written_) {
      out_ << "step,particle,phi,rho,lambda,iters,weight" << (with_dimension_ ? ",p" : "") << '\n';
      header_written_ = true;
    }
    for (const auto& r : rows) {
      out_ << r.step << ',' << r.particle << ',' << std::setprecision(17) << r.phi << ',' << r.rho << ','
           << r.lambda << ',' << r.iters << ',' << r.weight;
      if (with_dimension_) {
        out_ << ',' << r.dim;
      }
      out_ << '\n';
    }
  }

 private:
  std::ostream& out_;
  bool with_dimension_;
  bool header_written_ = false;
};

}  // namespace ipf

#endif  // IPF_FILTERS_DIAGNOSTICS_HPP
