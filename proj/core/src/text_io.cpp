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

#include "chemo/text_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "chemo/error.hpp"

namespace chemo {
namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out = (out << 8) | ((v >> (8 * b)) & 0xFFu);
    return out;
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto [end, ec] =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buffer.data(), end);
}

void write_u64_le(std::ostream& out, std::uint64_t value) {
  const std::uint64_t le = to_little(value);
  out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

void write_f64_le(std::ostream& out, double value) {
  write_u64_le(out, std::bit_cast<std::uint64_t>(value));
}

void write_f64_block_le(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) write_f64_le(out, v);
  }
}

std::uint64_t read_u64_le(std::istream& in) {
  std::uint64_t raw = 0;
  if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw)) {
    throw ConfigError("binary dump truncated");
  }
  return to_little(raw);
}

double read_f64_le(std::istream& in) {
  return std::bit_cast<double>(read_u64_le(in));
}

std::vector<double> read_f64_block_le(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
      throw ConfigError("binary dump truncated");
    }
  } else {
    for (auto& v : values) v = read_f64_le(in);
  }
  return values;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw std::invalid_argument("CsvTable: row width does not match header");
  }
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << ',';
      out << cells[c];
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << str();
}

}  // namespace chemo
