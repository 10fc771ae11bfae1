// speak/core/errors.hpp

// Copyright 2026  The SPEAK Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEAK_CORE_ERRORS_HPP_
#define SPEAK_CORE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace speak {

// Exit codes used by the CLI: 0 ok, 2 validation, 3 dependency, 4 numeric.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitDependency = 3,
  kExitNumeric = 4,
};

// Bad user input: parameter out of range, malformed file, shape mismatch.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape contract violated.
class ShapeError : public ValidationError {
 public:
  explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

// File could not be read or written; message carries the path.
class IoError : public ValidationError {
 public:
  explicit IoError(const std::string& msg) : ValidationError(msg) {}
};

// Frame/audio alignment violated on ingestion.
class IngestionError : public ValidationError {
 public:
  explicit IngestionError(const std::string& msg) : ValidationError(msg) {}
};

// A training stage was started without its prerequisite checkpoints.
class DependencyError : public std::runtime_error {
 public:
  explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or parameter during training; message names the step.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace speak

#endif  // SPEAK_CORE_ERRORS_HPP_
