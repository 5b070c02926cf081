// Copyright 2026 The dqfi Authors
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

namespace dqfi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: violated precondition, malformed model, bad argument.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested feature outside the supported range (e.g. EP order > 2).
class UnsupportedError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Numerical failure on otherwise valid input.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class OverflowError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Biorthogonal basis too ill-conditioned for the requested route.
class IllConditionedError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Left and right eigenvalue clusters could not be matched.
class PairingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace dqfi
