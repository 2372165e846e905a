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

#include "schema.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "chemo/error.hpp"

namespace chemo::cli {
namespace {

const char* type_name(FieldType type) {
  switch (type) {
    case FieldType::number: return "number";
    case FieldType::integer: return "non-negative integer";
    case FieldType::boolean: return "boolean";
    case FieldType::string: return "string";
    case FieldType::number_list: return "list of numbers";
    case FieldType::integer_list: return "list of non-negative integers";
    case FieldType::object: return "object";
  }
  return "?";
}

bool is_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

bool matches(FieldType type, const json& v) {
  switch (type) {
    case FieldType::number: return v.is_number();
    case FieldType::integer: return is_integer(v);
    case FieldType::boolean: return v.is_boolean();
    case FieldType::string: return v.is_string();
    case FieldType::number_list:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_number()) return false;
      }
      return true;
    case FieldType::integer_list:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!is_integer(e)) return false;
      }
      return true;
    case FieldType::object: return v.is_object();
  }
  return false;
}

void resolve_into(const Schema& schema, const json& user, const std::string& prefix,
                  json& out, std::vector<std::string>& problems) {
  if (!user.is_object()) {
    problems.push_back(prefix + ": expected an object");
    return;
  }
  for (const auto& [key, value] : user.items()) {
    if (!schema.find(key)) problems.push_back("unknown key '" + prefix + key + "'");
  }
  for (const Field& f : schema.fields) {
    const std::string path = prefix + f.key;
    if (!user.contains(f.key)) {
      if (f.fallback.is_null()) {
        problems.push_back("missing required key '" + path + "'");
      } else if (f.type == FieldType::object && f.nested) {
        json nested = json::object();
        resolve_into(*f.nested, f.fallback, path + ".", nested, problems);
        out[f.key] = nested;
      } else {
        out[f.key] = f.fallback;
      }
      continue;
    }
    const json& value = user.at(f.key);
    if (!matches(f.type, value)) {
      problems.push_back("key '" + path + "' must be a " + type_name(f.type));
      continue;
    }
    if (f.type == FieldType::object && f.nested) {
      json nested = json::object();
      resolve_into(*f.nested, value, path + ".", nested, problems);
      out[f.key] = nested;
    } else {
      out[f.key] = value;
    }
  }
}

json parse_scalar(FieldType type, const std::string& text, const std::string& key) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto fail = [&]() -> json {
    throw ConfigError("flag --" + flag_name(key) + ": cannot parse '" + text + "' as " +
                      type_name(type));
  };
  switch (type) {
    case FieldType::number:
    case FieldType::number_list: {
      double v = 0.0;
      const auto r = std::from_chars(begin, end, v);
      if (r.ec != std::errc{} || r.ptr != end) return fail();
      return v;
    }
    case FieldType::integer:
    case FieldType::integer_list: {
      std::uint64_t v = 0;
      const auto r = std::from_chars(begin, end, v);
      if (r.ec != std::errc{} || r.ptr != end) return fail();
      return v;
    }
    case FieldType::boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      return fail();
    case FieldType::string: return text;
    case FieldType::object: return fail();
  }
  return fail();
}

}  // namespace

const Field* Schema::find(const std::string& key) const {
  for (const auto& f : fields) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

json resolve(const Schema& schema, const json& user) {
  std::vector<std::string> problems;
  json out = json::object();
  resolve_into(schema, user, "", out, problems);
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << schema.name << " config has " << problems.size() << " problem(s):";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
  return out;
}

json parse_flag_value(const Field& field, const std::string& text) {
  if (field.type == FieldType::number_list || field.type == FieldType::integer_list) {
    json list = json::array();
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t comma = text.find(',', start);
      const std::string item =
          text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      list.push_back(parse_scalar(field.type, item, field.key));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return list;
  }
  return parse_scalar(field.type, text, field.key);
}

json load_config_file(const std::filesystem::path& file, const std::string& command) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + file.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("command") || doc.at("command") != command) {
      throw ConfigError("manifest " + file.string() + " was written by a different command");
    }
    if (!doc.contains("config")) throw ConfigError("manifest lacks a config object");
    return doc.at("config");
  }
  if (!doc.is_object()) throw ConfigError("config " + file.string() + " must be a JSON object");
  return doc;
}

std::string flag_name(const std::string& key) {
  std::string out = key;
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

}  // namespace chemo::cli
