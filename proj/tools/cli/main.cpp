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

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "chemo/error.hpp"
#include "chemo/version.hpp"
#include "commands.hpp"

namespace {

using chemo::cli::json;

// Flag text keyed by its JSON path inside the config.
struct FlagValues {
  std::map<std::vector<std::string>, std::pair<const chemo::cli::Field*, std::string>> by_path;
};

void add_schema_flags(CLI::App& app, const chemo::cli::Schema& schema,
                      std::vector<std::string> prefix, FlagValues& values) {
  for (const auto& field : schema.fields) {
    auto path = prefix;
    path.push_back(field.key);
    if (field.type == chemo::cli::FieldType::object) {
      add_schema_flags(app, *field.nested, path, values);
      continue;
    }
    if (path.size() == 1 && field.key == "output_dir") continue;  // --output
    std::string name;
    for (const auto& part : path) name += (name.empty() ? "" : "-") + chemo::cli::flag_name(part);
    auto& slot = values.by_path[path];
    slot.first = &field;
    std::string help = field.help;
    if (!field.fallback.is_null()) help += " [" + field.fallback.dump() + "]";
    app.add_option("--" + name, slot.second, help);
  }
}

json merge_flags(json config, const FlagValues& values) {
  for (const auto& [path, slot] : values.by_path) {
    if (slot.second.empty()) continue;
    json* node = &config;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!node->contains(path[i])) (*node)[path[i]] = json::object();
      node = &(*node)[path[i]];
    }
    (*node)[path.back()] = chemo::cli::parse_flag_value(*slot.first, slot.second);
  }
  return config;
}

int env_threads() {
  if (const char* v = std::getenv("CHEMO_THREADS")) {
    try {
      const int n = std::stoi(v);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw chemo::ConfigError(std::string("CHEMO_THREADS must be a positive integer, got ") + v);
  }
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const chemo::ConfigError*>(&e) || dynamic_cast<const chemo::DomainError*>(&e)) {
    return chemo::cli::kExitConfigError;
  }
  if (dynamic_cast<const chemo::NumericalInstability*>(&e)) return chemo::cli::kExitInstability;
  return chemo::cli::kExitCheckFailure;
}

struct Invocation {
  const chemo::cli::Command* command = nullptr;
  std::string config_file;
  std::string output;
  int threads = 0;
  FlagValues flags;
};

int run(const Invocation& inv) {
  json user = json::object();
  if (!inv.config_file.empty()) {
    user = chemo::cli::load_config_file(inv.config_file, inv.command->name);
  }
  user = merge_flags(user, inv.flags);
  if (!inv.output.empty()) {
    user["output_dir"] = inv.output;
  } else if (const char* env = std::getenv("CHEMO_OUTPUT_DIR")) {
    user["output_dir"] = env;
  }
  const json config = chemo::cli::resolve(*inv.command->schema, user);

  int threads = inv.threads > 0 ? inv.threads : env_threads();
  if (threads > 0) omp_set_num_threads(threads);
  threads = omp_get_max_threads();

  chemo::cli::RunRecorder recorder(inv.command->name, config,
                                   config.at("output_dir").get<std::string>(), threads);
  int status = chemo::cli::kExitPass;
  std::vector<std::string> notes;
  try {
    status = inv.command->run(config, recorder, std::cout);
  } catch (const std::exception& e) {
    // Failed runs still leave a manifest saying what happened.
    status = exit_code_for(e);
    notes.push_back(e.what());
    recorder.finish(status, notes);
    throw;
  }
  recorder.finish(status, notes);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemo: particle and mean-field chemotaxis runner"};
  app.set_version_flag("--version", std::string(chemo::kVersion));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Invocation>> invocations;
  for (const auto& command : chemo::cli::commands()) {
    auto inv = std::make_unique<Invocation>();
    inv->command = &command;
    CLI::App* sub = app.add_subcommand(command.name, command.help);
    sub->add_option("-c,--config", inv->config_file,
                    "JSON config, or a manifest.json to replay a run");
    sub->add_option("-o,--output", inv->output,
                    "output directory (else $CHEMO_OUTPUT_DIR, else config output_dir)");
    sub->add_option("-j,--threads", inv->threads, "worker threads (else $CHEMO_THREADS)")
        ->check(CLI::PositiveNumber);
    add_schema_flags(*sub, *command.schema, {}, inv->flags);
    invocations.push_back(std::move(inv));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chemo::cli::kExitConfigError;
  }

  try {
    for (const auto& inv : invocations) {
      if (app.got_subcommand(inv->command->name)) return run(*inv);
    }
  } catch (const chemo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return chemo::cli::kExitConfigError;
  } catch (const chemo::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return chemo::cli::kExitConfigError;
  } catch (const chemo::NumericalInstability& e) {
    std::cerr << "numerical instability: " << e.what() << "\n";
    return chemo::cli::kExitInstability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return chemo::cli::kExitCheckFailure;
  }
  return chemo::cli::kExitCheckFailure;
}
