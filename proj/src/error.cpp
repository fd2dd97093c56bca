/*
 * Copyright 2026 The MAMMO Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mammo/error.hpp"

namespace mammo {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kMissingArtifact:
      return "missing-artifact";
    case ErrorKind::kDataLeakage:
      return "data-leakage";
    case ErrorKind::kNumerical:
      return "numerical";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace mammo
