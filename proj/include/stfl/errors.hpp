/*
 * Copyright 2026 The STFL Authors.
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

#ifndef STFL_ERRORS_HPP_
#define STFL_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace stfl {

// Operand dimensions disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an API precondition (stale cache, mismatched state, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input data failed validation (labels outside {0,1}, non-numeric cells, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A party violated the message protocol or asked for something it cannot have.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Federated setup aborted. `condition()` names the violated requirement:
// kIdOverlapCondition (a guest shares no IDs with the host) or
// kNewFeatureCondition (a guest contributes no feature outside the host's).
class SetupError : public std::runtime_error {
 public:
  SetupError(std::string condition, const std::string& what)
      : std::runtime_error(condition + ": " + what),
        condition_(std::move(condition)) {}
  const std::string& condition() const { return condition_; }

 private:
  std::string condition_;
};

inline constexpr const char* kIdOverlapCondition = "id-overlap";
inline constexpr const char* kNewFeatureCondition = "new-feature";

}  // namespace stfl

#endif  // STFL_ERRORS_HPP_
