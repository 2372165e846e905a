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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace chemo {

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// Little-endian fixed-width encoding of the binary dump formats.
void write_u64_le(std::ostream& out, std::uint64_t value);
void write_f64_le(std::ostream& out, double value);
void write_f64_block_le(std::ostream& out, std::span<const double> values);
std::uint64_t read_u64_le(std::istream& in);
double read_f64_le(std::istream& in);
std::vector<double> read_f64_block_le(std::istream& in, std::size_t count);

// Comma-separated table with a header row; cells are preformatted strings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept {
    return rows_;
  }
  std::string str() const;
  void write(const std::filesystem::path& file) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace chemo
