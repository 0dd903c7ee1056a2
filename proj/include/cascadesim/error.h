// Copyright 2026 The cascadesim Authors
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

#ifndef CASCADESIM_ERROR_H_
#define CASCADESIM_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascadesim {

enum class ErrorCode {
  kParse,
  kShape,
  kMissingModel,
  kMissingInput,
  kInvariant,
  kInfeasible,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so the
// CLI can map error classes onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

// Throws an Error with `code` when `condition` is false.
inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace cascadesim

#endif  // CASCADESIM_ERROR_H_
