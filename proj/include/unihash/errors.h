// Copyright 2026 The UniHash Authors.
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

namespace unihash {

// Error categories. The CLI maps these onto exit codes, so each kind of
// failure gets its own type instead of a generic runtime_error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter ranges passed to an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed feature file, checkpoint or config document.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between arrays.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value or a value outside a function's domain
/// (e.g. a zero-norm code row fed to a cosine).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Empty query/database sets and similar evaluation preconditions.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The requested construction cannot exist (e.g. Hadamard order not a power
/// of two).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Randomized construction gave up within its attempt budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace unihash
