// Copyright 2026 The ctqw Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace ctqw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong shape, non-Hermitian, unnormalized, unknown label.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A gap quantity was requested on a spectrum with fewer than two eigenspaces.
class GapUndefinedError : public Error {
 public:
  using Error::Error;
};

// Two independent computations of the same quantity disagree.
class NumericalInconsistency : public Error {
 public:
  using Error::Error;
};

// Every candidate time produced a vanishing success probability.
class DegenerateProbabilityError : public Error {
 public:
  using Error::Error;
};

// Markov chain premises (ergodic, reversible) violated.
class ChainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Oracle query for a label that is not a vertex of the instance.
class InvalidLabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace ctqw
