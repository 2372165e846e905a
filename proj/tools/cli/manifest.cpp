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

#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <fstream>
#include <memory>

#include "chemo/error.hpp"
#include "chemo/version.hpp"

namespace chemo::cli {

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string() + " for checksum");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest init failed");
  }
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& file, const std::string& content) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunRecorder::RunRecorder(std::string command, json config,
                         std::filesystem::path output_dir, int threads)
    : command_(std::move(command)),
      config_(std::move(config)),
      output_dir_(std::move(output_dir)),
      threads_(threads),
      started_at_(utc_timestamp()) {
  std::filesystem::create_directories(output_dir_);
}

void RunRecorder::add_output(const std::string& relative, bool deterministic) {
  for (auto& entry : outputs_) {
    if (entry.first == relative) {
      entry.second = deterministic;
      return;
    }
  }
  outputs_.emplace_back(relative, deterministic);
}

void RunRecorder::write_output(const std::string& relative, const std::string& content,
                               bool deterministic) {
  write_file_atomic(path(relative), content);
  add_output(relative, deterministic);
}

void RunRecorder::finish(int status, const std::vector<std::string>& notes) {
  json files = json::array();
  for (const auto& [relative, deterministic] : outputs_) {
    const auto file = path(relative);
    files.push_back({{"path", relative},
                     {"sha256", sha256_file(file)},
                     {"bytes", std::filesystem::file_size(file)},
                     {"deterministic", deterministic}});
  }
  json manifest = {
      {"manifest_version", 1},
      {"tool", "chemo"},
      {"version", kVersion},
      {"command", command_},
      {"config", config_},
      {"seed", config_.value("seed", json())},
      {"threads", threads_},
      {"started_at", started_at_},
      {"finished_at", utc_timestamp()},
      {"exit_code", status},
      {"notes", notes},
      {"outputs", files},
  };
  write_file_atomic(path("manifest.json"), manifest.dump(2) + "\n");
}

}  // namespace chemo::cli
