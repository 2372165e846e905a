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

#include "chemo/path_io.hpp"

#include <fstream>
#include <sstream>

#include "chemo/error.hpp"
#include "chemo/text_io.hpp"

namespace chemo {
namespace {

void write_header(std::ostream& out, const PathEnsemble& ensemble) {
  write_u64_le(out, ensemble.n_particles());
  write_u64_le(out, ensemble.grid().n_steps);
  write_f64_le(out, ensemble.grid().dt);
  write_u64_le(out, ensemble.seed());
}

PathDumpHeader read_header(std::istream& in) {
  PathDumpHeader h;
  h.n_particles = read_u64_le(in);
  h.n_steps = read_u64_le(in);
  h.dt = read_f64_le(in);
  h.seed = read_u64_le(in);
  if (h.n_particles == 0 || h.n_steps == 0 || !(h.dt > 0.0)) {
    throw ConfigError("path dump: invalid header");
  }
  return h;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + file.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

}  // namespace

void write_path_dump(const std::filesystem::path& file,
                     const PathEnsemble& ensemble) {
  if (!ensemble.complete()) throw StateError("path dump: ensemble incomplete");
  auto out = open_out(file);
  write_header(out, ensemble);
  write_f64_block_le(out, ensemble.positions());
}

void write_increment_dump(const std::filesystem::path& file,
                          const PathEnsemble& ensemble) {
  if (!ensemble.complete() || !ensemble.has_increments()) {
    throw StateError("increment dump: increments not available");
  }
  auto out = open_out(file);
  write_header(out, ensemble);
  for (std::size_t i = 0; i < ensemble.n_particles(); ++i) {
    write_f64_block_le(out, ensemble.increments(i));
  }
}

PathDumpHeader read_path_dump_header(const std::filesystem::path& file) {
  auto in = open_in(file);
  return read_header(in);
}

PathEnsemble read_path_dump(const std::filesystem::path& file,
                            const std::optional<std::filesystem::path>& increments) {
  auto in = open_in(file);
  const auto h = read_header(in);
  const TimeGrid grid{h.dt, static_cast<std::size_t>(h.n_steps)};
  PathEnsemble ensemble(h.n_particles, grid, h.seed);
  auto positions = read_f64_block_le(in, h.n_particles * (h.n_steps + 1));
  std::vector<double> dw;
  if (increments) {
    auto inc = open_in(*increments);
    const auto hi = read_header(inc);
    if (hi.n_particles != h.n_particles || hi.n_steps != h.n_steps ||
        hi.dt != h.dt || hi.seed != h.seed) {
      throw ConfigError("increment dump header does not match path dump");
    }
    dw = read_f64_block_le(inc, h.n_particles * h.n_steps);
  }
  ensemble.load(std::move(positions), std::move(dw));
  return ensemble;
}

std::string path_dump_manifest(const PathEnsemble& ensemble,
                               const std::string& positions_file,
                               const std::string& increments_file) {
  std::ostringstream out;
  out << "format=chemo-paths-v1\n"
      << "byte_order=little-endian\n"
      << "header=u64 n_particles,u64 n_steps,f64 dt,u64 seed\n"
      << "positions_layout=f64[n_particles][n_steps+1] particle-major\n"
      << "increments_layout=f64[n_particles][n_steps] particle-major\n"
      << "positions_file=" << positions_file << '\n'
      << "increments_file=" << increments_file << '\n'
      << "n_particles=" << ensemble.n_particles() << '\n'
      << "n_steps=" << ensemble.grid().n_steps << '\n'
      << "dt=" << format_double(ensemble.grid().dt) << '\n'
      << "horizon=" << format_double(ensemble.grid().horizon()) << '\n'
      << "seed=" << ensemble.seed() << '\n';
  return out.str();
}

}  // namespace chemo
