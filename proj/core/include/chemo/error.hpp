// Copyright 2026 The chemo Authors
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

namespace chemo {

// Invalid argument to a math routine (t <= 0, p < 1, non-finite input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inconsistent or out-of-range run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation requested on state that does not exist yet (unfilled history,
// missing increments).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numerical scheme left its stable regime (negative density beyond the
// limiter tolerance, mass leaking through the truncated boundary).
class NumericalInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chemo
