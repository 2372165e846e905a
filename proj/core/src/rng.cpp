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

#include "chemo/rng.hpp"

#include <cmath>
#include <numbers>

namespace chemo {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline double to_open_unit(std::uint64_t bits) noexcept {
  // (bits >> 11) / 2^53 + 2^-54 lies strictly inside (0, 1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(mix64(seed) ^ (tag * 0xD1B54A32D192ED03ull));
}

CounterRng::CounterRng(std::uint64_t key) noexcept : key_(key) {}

CounterRng::CounterRng(std::uint64_t seed, StreamDomain domain) noexcept
    : key_(derive_seed(seed, static_cast<std::uint64_t>(domain))) {}

PhiloxCounter CounterRng::raw(std::uint64_t stream,
                              std::uint64_t index) const noexcept {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(key_),
                      static_cast<std::uint32_t>(key_ >> 32)};
  return philox4x32_10(ctr, key);
}

std::array<double, 2> CounterRng::uniform_pair(
    std::uint64_t stream, std::uint64_t index) const noexcept {
  const auto r = raw(stream, index);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
  return {to_open_unit(a), to_open_unit(b)};
}

double CounterRng::uniform(std::uint64_t stream,
                           std::uint64_t index) const noexcept {
  return uniform_pair(stream, index)[0];
}

std::array<double, 2> CounterRng::normal_pair(
    std::uint64_t stream, std::uint64_t index) const noexcept {
  const auto [u1, u2] = uniform_pair(stream, index);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double CounterRng::normal(std::uint64_t stream,
                          std::uint64_t index) const noexcept {
  return normal_pair(stream, index)[0];
}

}  // namespace chemo
