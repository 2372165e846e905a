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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace chemo::cli {

using json = nlohmann::json;

enum class FieldType { number, integer, boolean, string, number_list, integer_list, object };

struct Schema;

struct Field {
  std::string key;
  FieldType type;
  json fallback;  // default value; null means required
  std::string help;
  const Schema* nested = nullptr;  // for FieldType::object
};

struct Schema {
  std::string name;
  std::vector<Field> fields;

  const Field* find(const std::string& key) const;
};

// Fills defaults, checks types, and rejects unknown keys. Every problem found
// is listed in one ConfigError.
json resolve(const Schema& schema, const json& user);

// Parses a flag value given as text into the JSON type of `field`. Lists are
// comma separated.
json parse_flag_value(const Field& field, const std::string& text);

// Reads a JSON config file. A run manifest is accepted too: its "config"
// object is used, provided "command" matches.
json load_config_file(const std::filesystem::path& file, const std::string& command);

// Flag spelling of a config key: underscores become dashes.
std::string flag_name(const std::string& key);

}  // namespace chemo::cli
