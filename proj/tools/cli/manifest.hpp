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

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "schema.hpp"

namespace chemo::cli {

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& file, const std::string& content);

// Collects outputs of one command run and writes manifest.json at the end.
class RunRecorder {
 public:
  RunRecorder(std::string command, json config, std::filesystem::path output_dir,
              int threads);

  const std::filesystem::path& output_dir() const noexcept { return output_dir_; }
  std::filesystem::path path(const std::string& relative) const {
    return output_dir_ / relative;
  }

  // Registers a file already written under output_dir. Wall-clock data is
  // registered as non-deterministic and left out of replay comparisons.
  void add_output(const std::string& relative, bool deterministic = true);

  // Writes `content` atomically and registers it.
  void write_output(const std::string& relative, const std::string& content,
                    bool deterministic = true);

  // Writes manifest.json; `status` is the exit code the command returns.
  void finish(int status, const std::vector<std::string>& notes = {});

 private:
  std::string command_;
  json config_;
  std::filesystem::path output_dir_;
  int threads_;
  std::string started_at_;
  std::vector<std::pair<std::string, bool>> outputs_;
};

std::string utc_timestamp();

}  // namespace chemo::cli
