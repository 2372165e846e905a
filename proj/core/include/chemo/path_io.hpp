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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "chemo/particles.hpp"

namespace chemo {

// Binary path dump, all fields little-endian:
//   u64 N | u64 n_steps | f64 dt | u64 seed        (32-byte header)
//   f64 positions[N][n_steps + 1]                  (particle-major rows)
// The increment dump uses the same header followed by f64 dW[N][n_steps].
struct PathDumpHeader {
  std::uint64_t n_particles = 0;
  std::uint64_t n_steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kPathDumpHeaderBytes = 32;

void write_path_dump(const std::filesystem::path& file,
                     const PathEnsemble& ensemble);
void write_increment_dump(const std::filesystem::path& file,
                          const PathEnsemble& ensemble);

PathDumpHeader read_path_dump_header(const std::filesystem::path& file);

// Reads a position dump and, when given, the matching increment dump.
PathEnsemble read_path_dump(
    const std::filesystem::path& file,
    const std::optional<std::filesystem::path>& increments = std::nullopt);

// Plain-text key=value description of a dump pair.
std::string path_dump_manifest(const PathEnsemble& ensemble,
                               const std::string& positions_file,
                               const std::string& increments_file);

}  // namespace chemo
