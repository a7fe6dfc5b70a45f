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

#ifndef IPF_CORE_RANDOM_HPP
#define IPF_CORE_RANDOM_HPP

#include <cstdint>
#include <random>

#include "ipf/core/linalg.hpp"

namespace ipf {

using Rng = std::mt19937_64;

/// Purpose tag of a random stream. Streams with different tags never overlap.
enum class Stream : std::uint64_t {
  kInitial = 1,
  kProposal = 2,
  kModelNoise = 3,
  kResample = 4,
  kObsPerturbation = 5,
  kTruth = 6,
  kObservation = 7,
  kTest = 99,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Engine for (seed, tag, step, index); the same key always gives the same draws.
inline Rng make_stream(std::uint64_t seed, Stream tag, std::uint64_t step = 0, std::uint64_t index = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ step);
  h = mix64(h ^ (index + 0x632be59bd9b4e019ULL));
  return Rng{h};
}

inline Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    out[i] = normal(rng);
  }
  return out;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

}  // namespace ipf

#endif  // IPF_CORE_RANDOM_HPP
