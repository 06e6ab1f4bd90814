// Copyright 2026 The gridicl Authors.
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

#ifndef GRIDICL_ERRORS_H_
#define GRIDICL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace gridicl {

enum class ErrorKind {
  kInvalidInput,
  kInvalidLayout,
  kInvalidResolution,
  kIndex,
  kInvalidConfig,
  kShape,
  kNumeric,
  kIo,
  kNotFound,
  kAnnotation,
  kTransport,
  kMalformedResponse,
  kUndefinedDirection,
  kTimeout,
};

const char* error_kind_name(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gridicl

#endif  // GRIDICL_ERRORS_H_
