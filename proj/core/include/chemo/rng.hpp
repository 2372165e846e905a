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

#include <array>
#include <cstdint>

namespace chemo {

// Counter-based random streams (Philox4x32-10). Every draw is a pure function
// of (key, stream, index), so results do not depend on evaluation order or on
// how work is split across threads.

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// splitmix64 finaliser; used to derive independent keys from (seed, tag).
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

// Disjoint key domains for the different consumers of a run seed.
enum class StreamDomain : std::uint64_t {
  initial_positions = 0x1001,
  brownian_increments = 0x1002,
  reference_paths = 0x1003,
  history_paths = 0x1004,
  replica = 0x1005,
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept;
  CounterRng(std::uint64_t seed, StreamDomain domain) noexcept;

  std::uint64_t key() const noexcept { return key_; }

  PhiloxCounter raw(std::uint64_t stream, std::uint64_t index) const noexcept;

  // Two independent uniforms on the open interval (0, 1), 53-bit resolution.
  std::array<double, 2> uniform_pair(std::uint64_t stream,
                                     std::uint64_t index) const noexcept;
  double uniform(std::uint64_t stream, std::uint64_t index) const noexcept;

  // Box-Muller on uniform_pair(stream, index).
  std::array<double, 2> normal_pair(std::uint64_t stream,
                                    std::uint64_t index) const noexcept;
  double normal(std::uint64_t stream, std::uint64_t index) const noexcept;

 private:
  std::uint64_t key_;
};

}  // namespace chemo
