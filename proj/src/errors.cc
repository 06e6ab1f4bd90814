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

#include "gridicl/errors.h"

namespace gridicl {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kInvalidLayout: return "invalid-layout";
    case ErrorKind::kInvalidResolution: return "invalid-resolution";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kAnnotation: return "annotation";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kMalformedResponse: return "malformed-response";
    case ErrorKind::kUndefinedDirection: return "undefined-direction";
    case ErrorKind::kTimeout: return "timeout";
  }
  return "unknown";
}

}  // namespace gridicl
