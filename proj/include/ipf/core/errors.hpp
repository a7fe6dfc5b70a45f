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

#ifndef IPF_CORE_ERRORS_HPP
#define IPF_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ipf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range options, inconsistent inputs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A covariance that had to be inverted or factored is singular.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

/// Every particle of an ensemble ended up with zero weight.
class FilterDivergence : public Error {
 public:
  using Error::Error;
};

/// A numerical routine produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

}  // namespace ipf

#endif  // IPF_CORE_ERRORS_HPP
