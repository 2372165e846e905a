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

#include <ostream>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "schema.hpp"

namespace chemo::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitInstability = 3,
};

struct Command {
  std::string name;
  std::string help;
  const Schema* schema;
  // Runs with a resolved config; returns the exit code.
  int (*run)(const json& config, RunRecorder& recorder, std::ostream& log);
};

const std::vector<Command>& commands();

}  // namespace chemo::cli
