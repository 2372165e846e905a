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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "chemo/diagnostics.hpp"
#include "chemo/error.hpp"
#include "chemo/kernel.hpp"
#include "chemo/mean_field.hpp"
#include "chemo/particles.hpp"
#include "chemo/path_io.hpp"
#include "chemo/rng.hpp"
#include "chemo/stochastic.hpp"
#include "chemo/text_io.hpp"

namespace chemo::cli {
namespace {

using FT = FieldType;

// ---- shared schema pieces -------------------------------------------------

const Schema& initial_schema() {
  static const Schema s{"initial",
                        {{"kind", FT::string, "gaussian", "gaussian | uniform | two_bump"},
                         {"mean", FT::number, 0.0, "gaussian mean"},
                         {"stddev", FT::number, 1.0, "gaussian standard deviation"},
                         {"lo", FT::number, -1.0, "uniform lower end"},
                         {"hi", FT::number, 1.0, "uniform upper end"},
                         {"weight", FT::number, 0.5, "two_bump weight of the first bump"},
                         {"mean1", FT::number, -1.0, "two_bump first mean"},
                         {"stddev1", FT::number, 0.5, "two_bump first sd"},
                         {"mean2", FT::number, 1.0, "two_bump second mean"},
                         {"stddev2", FT::number, 0.5, "two_bump second sd"}}};
  return s;
}

std::vector<Field> common_fields() {
  return {{"schema_version", FT::integer, 1, "config schema version"},
          {"seed", FT::integer, 1, "master seed"},
          {"output_dir", FT::string, "chemo_out", "output directory"}};
}

std::vector<Field> kernel_fields() {
  return {{"lambda", FT::number, 0.0, "decay rate of the chemical, >= 0"},
          {"chi", FT::number, 1.0, "chemotactic coupling"}};
}

Field initial_field() {
  return {"initial", FT::object, json::object(), "law of the initial positions",
          &initial_schema()};
}

template <typename... Parts>
std::vector<Field> concat(Parts&&... parts) {
  std::vector<Field> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

void check_schema_version(const json& c) {
  if (c.at("schema_version").get<std::uint64_t>() != 1) {
    throw ConfigError("unsupported schema_version (this build reads version 1)");
  }
}

double num(const json& c, const char* key) { return c.at(key).get<double>(); }
std::uint64_t uint(const json& c, const char* key) { return c.at(key).get<std::uint64_t>(); }

std::vector<double> num_list(const json& c, const char* key) {
  return c.at(key).get<std::vector<double>>();
}
std::vector<std::size_t> uint_list(const json& c, const char* key) {
  return c.at(key).get<std::vector<std::size_t>>();
}

KernelParams kernel_params(const json& c, bool allow_zero_coupling) {
  KernelParams p{num(c, "lambda"), num(c, "chi")};
  p.validate(allow_zero_coupling);
  return p;
}

InitialLaw initial_law(const json& c) {
  const json& j = c.at("initial");
  const std::string kind = j.at("kind");
  if (kind == "gaussian") return InitialLaw::gaussian(num(j, "mean"), num(j, "stddev"));
  if (kind == "uniform") return InitialLaw::uniform(num(j, "lo"), num(j, "hi"));
  if (kind == "two_bump") {
    return InitialLaw::two_bump(num(j, "weight"), num(j, "mean1"), num(j, "stddev1"),
                                num(j, "mean2"), num(j, "stddev2"));
  }
  throw ConfigError("initial.kind must be gaussian, uniform or two_bump");
}

TimeGrid time_grid(const json& c) { return TimeGrid::from_horizon(num(c, "horizon"), num(c, "dt")); }

std::string yes_no(bool pass) { return pass ? "pass" : "FAIL"; }

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ConfigError(std::string(what) + " must be positive");
}

// ---- kernel-check ---------------------------------------------------------

const Schema& kernel_check_schema() {
  static const Schema s{
      "kernel-check",
      concat(common_fields(), std::vector<Field>{{"lambda", FT::number, 0.0, "decay rate"}},
             std::vector<Field>{
                 {"p", FT::number_list, json::array({1.0, 2.0, 4.0}), "exponents p >= 1"},
                 {"t", FT::number_list, json::array({0.25, 0.5, 1.0, 2.0, 4.0}),
                  "times for the norm-scaling fit"},
                 {"n_random", FT::integer, 1000, "random (x, a, b) for the erf oracle"},
                 {"slope_tolerance", FT::number, 1e-3, "tolerance on the fitted exponent"},
                 {"norm_tolerance", FT::number, 1e-8, "relative tolerance vs quadrature norm"},
                 {"integral_tolerance", FT::number, 1e-10,
                  "relative tolerance of the erf route vs quadrature"}})};
  return s;
}

int run_kernel_check(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  const KernelParams params{num(c, "lambda"), 1.0};
  params.validate();
  const auto ps = num_list(c, "p");
  const auto ts = num_list(c, "t");
  if (ps.empty() || ts.size() < 2) throw ConfigError("need at least one p and two t values");
  for (double p : ps) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
      throw DomainError("p = " + format_double(p) + " is outside [1, inf)");
    }
  }
  for (double t : ts) {
    if (!(t > 0.0)) throw DomainError("t values must be positive");
  }
  const double slope_tol = num(c, "slope_tolerance");
  const double norm_tol = num(c, "norm_tolerance");
  const double int_tol = num(c, "integral_tolerance");

  CsvTable table({"check", "p", "t", "value", "reference", "error", "tolerance", "result"});
  bool all_pass = true;
  auto row = [&](const std::string& check, const std::string& p, const std::string& t,
                 double value, double reference, double error, double tol) {
    const bool pass = error <= tol;
    all_pass = all_pass && pass;
    table.add_row({check, p, t, format_double(value), format_double(reference),
                   format_double(error), format_double(tol), yes_no(pass)});
  };

  for (double p : ps) {
    std::vector<double> lx, ly;
    for (double t : ts) {
      const double norm = kernel_lp_norm(t, p, params);
      const double ref = kernel_lp_norm_reference(t, p, params);
      row("lp_norm_vs_quadrature", format_double(p), format_double(t), norm, ref,
          std::fabs(norm - ref) / ref, norm_tol);
      lx.push_back(std::log(t));
      ly.push_back(std::log(norm) + params.lambda * t);  // undo exp(-lambda t)
    }
    const double slope = least_squares(lx, ly).slope;
    const double expected = -(1.0 - 1.0 / (2.0 * p));
    row("lp_norm_scaling_slope", format_double(p), "", slope, expected,
        std::fabs(slope - expected), slope_tol);
  }
  if (params.lambda == 0.0) {
    const double l1 = kernel_lp_norm(1.0, 1.0, params);
    row("l1_norm_closed_form", "1", "1", l1, std::sqrt(2.0 / std::numbers::pi),
        std::fabs(l1 - std::sqrt(2.0 / std::numbers::pi)), 1e-12);
  }

  const CounterRng rng(uint(c, "seed"), StreamDomain::replica);
  const std::uint64_t n_random = uint(c, "n_random");
  double worst = 0.0;
  double worst_bound = 0.0;
  double worst_odd = 0.0;
  for (std::uint64_t n = 0; n < n_random; ++n) {
    const auto u = rng.uniform_pair(n, 0);
    const auto v = rng.uniform_pair(n, 1);
    const double x = -3.0 + 6.0 * u[0];
    const double a = (n % 10 == 0) ? 0.0 : 2.0 * u[1];
    const double b = a + std::pow(10.0, -3.0 + 3.5 * v[0]);
    const double got = kernel_time_integral(x, a, b, params);
    const double want = kernel_time_integral_reference(x, a, b, params);
    const double err = got == want ? 0.0 : std::fabs(got - want) / std::fabs(want);
    worst = std::max(worst, err);
    worst_bound = std::max(worst_bound, std::fabs(got) - 1.0);
    const double t = 0.05 + 3.0 * v[1];
    worst_odd = std::max(worst_odd, std::fabs(kernel_eval(t, x, params) +
                                              kernel_eval(t, -x, params)));
  }
  row("time_integral_vs_quadrature", "", "", worst, 0.0, worst, int_tol);
  row("time_integral_bounded_by_one", "", "", worst_bound + 1.0, 1.0,
      std::max(0.0, worst_bound), 0.0);
  row("kernel_antisymmetry", "", "", worst_odd, 0.0, worst_odd, 0.0);

  rec.write_output("kernel_check.csv", table.str());
  log << table.str();
  return all_pass ? kExitPass : kExitCheckFailure;
}

// ---- simulate -------------------------------------------------------------

const Schema& simulate_schema() {
  static const Schema s{
      "simulate",
      concat(common_fields(), kernel_fields(),
             std::vector<Field>{
                 initial_field(),
                 {"n_particles", FT::integer, 64, "number of particles N"},
                 {"dt", FT::number, 0.01, "time step"},
                 {"horizon", FT::number, 0.5, "final time T (a multiple of dt)"},
                 {"driftless", FT::integer, 0, "r: particles 0..r-1 Brownian (0 = full system)"},
                 {"tail_cutoff", FT::boolean, true, "skip negligible history slabs"},
                 {"reference", FT::boolean, false, "write the driftless Brownian reference"},
                 {"write_increments", FT::boolean, true, "also dump Brownian increments"}})};
  return s;
}

int run_simulate(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  const KernelParams params = kernel_params(c, /*allow_zero_coupling=*/true);
  const InitialLaw law = initial_law(c);
  const TimeGrid grid = time_grid(c);
  const std::size_t n = uint(c, "n_particles");
  const std::size_t r = uint(c, "driftless");
  const std::uint64_t seed = uint(c, "seed");
  require_positive(n, "n_particles");
  const DriftOptions options{c.at("tail_cutoff").get<bool>()};

  DriftStats stats;
  const PathEnsemble ensemble =
      c.at("reference").get<bool>()
          ? brownian_reference(n, grid, law, seed)
          : (r > 0 ? simulate_partial_driftless(r, n, grid, law, params, seed, options)
                   : simulate(n, grid, law, params, seed, options, &stats));

  write_path_dump(rec.path("paths.bin"), ensemble);
  rec.add_output("paths.bin");
  std::string increments_file;
  if (c.at("write_increments").get<bool>()) {
    increments_file = "increments.bin";
    write_increment_dump(rec.path(increments_file), ensemble);
    rec.add_output(increments_file);
  }
  rec.write_output("paths.manifest",
                   path_dump_manifest(ensemble, "paths.bin", increments_file));

  CsvTable summary({"k", "t", "mean", "variance", "min", "max"});
  for (std::size_t k = 0; k <= grid.n_steps; ++k) {
    const auto m = ensemble.marginal(k);
    const McMean mm = summarize_mean(m);
    double var = 0.0;
    for (double x : m) var += (x - mm.estimate) * (x - mm.estimate);
    var = m.size() > 1 ? var / static_cast<double>(m.size() - 1) : 0.0;
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    summary.add_row({std::to_string(k), format_double(grid.time(k)), format_double(mm.estimate),
                     format_double(var), format_double(*lo), format_double(*hi)});
  }
  rec.write_output("summary.csv", summary.str());

  CsvTable st({"key", "value"});
  st.add_row({"n_particles", std::to_string(n)});
  st.add_row({"n_steps", std::to_string(grid.n_steps)});
  st.add_row({"kernel_calls", std::to_string(stats.kernel_calls)});
  st.add_row({"skipped_slabs", std::to_string(stats.skipped_slabs)});
  rec.write_output("run_stats.csv", st.str());
  log << "simulated N=" << n << " steps=" << grid.n_steps
      << " kernel_calls=" << stats.kernel_calls << "\n";
  return kExitPass;
}

// ---- pde ------------------------------------------------------------------

std::vector<Field> spatial_fields() {
  return {{"x_min", FT::number, -8.0, "left end of the truncated domain"},
          {"x_max", FT::number, 8.0, "right end of the truncated domain"},
          {"n_cells", FT::integer, 1600, "number of cells"}};
}

SpatialGrid spatial_grid(const json& c) {
  SpatialGrid g{num(c, "x_min"), num(c, "x_max"), static_cast<std::size_t>(uint(c, "n_cells"))};
  g.validate();
  return g;
}

const Schema& pde_schema() {
  static const Schema s{
      "pde",
      concat(common_fields(), kernel_fields(), spatial_fields(),
             std::vector<Field>{
                 initial_field(),
                 {"dt", FT::number, 0.01, "snapshot spacing (the particle time step)"},
                 {"horizon", FT::number, 1.0, "final time"},
                 {"max_dt", FT::number, 5e-5, "largest PDE step (also capped by h^2)"},
                 {"heat_tolerance", FT::number, 1e-3, "max-norm error allowed vs the heat flow (chi = 0)"},
                 {"mass_tolerance", FT::number, 1e-8, "cumulative mass drift allowed"},
                 {"decay_t_min", FT::number, 0.01, "first time of the L2 decay check"},
                 {"decay_factor", FT::number, 3.0, "max of t^{1/4}|rho_t|_2 over its value at T"},
                 {"write_csv", FT::boolean, true, "also write snapshots.csv"}})};
  return s;
}

int run_pde(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  const KernelParams params = kernel_params(c, /*allow_zero_coupling=*/true);
  const InitialLaw law = initial_law(c);
  const TimeGrid times = time_grid(c);
  const SpatialGrid grid = spatial_grid(c);
  const PdeRun run = pde_solve(law, grid, times, num(c, "max_dt"), params);

  write_snapshots_binary(rec.path("snapshots.bin"), run.snapshots);
  rec.add_output("snapshots.bin");
  if (c.at("write_csv").get<bool>()) {
    write_snapshots_csv(rec.path("snapshots.csv"), run.snapshots);
    rec.add_output("snapshots.csv");
  }

  CsvTable table({"check", "value", "tolerance", "result"});
  bool all_pass = true;
  auto row = [&](const std::string& name, double value, double tol, bool checked) {
    const bool pass = !checked || value <= tol;
    all_pass = all_pass && pass;
    table.add_row({name, format_double(value), checked ? format_double(tol) : "",
                   checked ? yes_no(pass) : "info"});
  };
  row("cumulative_mass_drift", run.cumulative_mass_drift, num(c, "mass_tolerance"), true);
  row("max_step_mass_change", run.max_step_mass_change, 1e-12, true);
  row("min_density_before_clip", run.min_density, 0.0, false);
  row("max_clipped_mass", run.max_clipped_mass, 1e-10, true);
  row("pde_dt", run.pde_dt, 0.0, false);
  double asym = 0.0;
  for (const auto& s : run.snapshots) asym = std::max(asym, s.rho.max_abs_asymmetry());
  row("max_asymmetry", asym, 1e-10, law.symmetric() && law.mean() == 0.0 &&
                                        grid.x_min == -grid.x_max);
  if (params.chi == 0.0) {
    double worst = 0.0;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      const auto& rho = run.snapshots[k].rho;
      for (std::size_t i = 0; i < grid.n_cells; ++i) {
        worst = std::max(worst, std::fabs(rho.values[i] -
                                          law.evolved_density(times.time(k), grid.center(i))));
      }
    }
    row("heat_max_error", worst, num(c, "heat_tolerance"), true);
  }
  std::vector<double> decay_times;
  for (std::size_t k = 1; k <= times.n_steps; ++k) {
    if (times.time(k) >= num(c, "decay_t_min") * (1.0 - 1e-12)) decay_times.push_back(times.time(k));
  }
  if (!decay_times.empty()) {
    const auto series = l2_decay_series(run.snapshots, decay_times);
    double peak = 0.0;
    for (const auto& p : series) peak = std::max(peak, p.value);
    row("l2_decay_max_over_final", peak / series.back().value, num(c, "decay_factor"), true);
    CsvTable decay({"t", "t_quarter_l2_norm"});
    for (const auto& p : series) decay.add_row({format_double(p.t), format_double(p.value)});
    rec.write_output("l2_decay.csv", decay.str());
  }
  rec.write_output("report.csv", table.str());
  log << table.str();
  return all_pass ? kExitPass : kExitCheckFailure;
}

// ---- chaos ----------------------------------------------------------------

const Schema& chaos_schema() {
  static const Schema s{
      "chaos",
      concat(common_fields(), kernel_fields(), spatial_fields(),
             std::vector<Field>{
                 initial_field(),
                 {"n_values", FT::integer_list, json::array({32, 128, 512}), "ensemble sizes"},
                 {"replicas", FT::integer, 16, "independent replicas per N"},
                 {"times", FT::number_list, json::array({0.5}), "evaluation times (grid times)"},
                 {"dt", FT::number, 5e-3, "particle time step"},
                 {"horizon", FT::number, 0.5, "final time"},
                 {"pde_max_dt", FT::number, 1e-4, "largest PDE step for the reference"},
                 {"tail_cutoff", FT::boolean, true, "skip negligible history slabs"},
                 {"require_decrease", FT::boolean, false,
                  "exit 1 unless mean W1 decreases in N beyond 2 SE at the last time"}})};
  return s;
}

json replica_to_json(const ChaosReplica& r, const std::string& fingerprint) {
  json decay = json::array();
  for (const auto& p : r.l2_decay) {
    decay.push_back({{"t", p.t},
                     {"bandwidth", p.bandwidth},
                     {"value", p.value},
                     {"alt_bandwidth", p.alt_bandwidth},
                     {"alt_value", p.alt_value}});
  }
  return {{"fingerprint", fingerprint},
          {"n", r.n},
          {"replica", r.replica},
          {"seed", r.seed},
          {"w1", r.w1},
          {"l2_decay", decay},
          {"max_abs_position", r.max_abs_position},
          {"kernel_calls", r.kernel_calls}};
}

std::optional<ChaosReplica> replica_from_json(const json& j, const std::string& fingerprint) {
  if (j.value("fingerprint", "") != fingerprint) return std::nullopt;
  ChaosReplica r;
  r.n = j.at("n");
  r.replica = j.at("replica");
  r.seed = j.at("seed");
  r.w1 = j.at("w1").get<std::vector<double>>();
  for (const auto& p : j.at("l2_decay")) {
    r.l2_decay.push_back({p.at("t"), p.at("bandwidth"), p.at("value"), p.at("alt_bandwidth"),
                          p.at("alt_value")});
  }
  r.max_abs_position = j.at("max_abs_position");
  r.kernel_calls = j.at("kernel_calls");
  return r;
}

int run_chaos(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  ChaosConfig cfg;
  cfg.params = kernel_params(c, /*allow_zero_coupling=*/true);
  cfg.initial = initial_law(c);
  cfg.grid = time_grid(c);
  cfg.n_values = uint_list(c, "n_values");
  cfg.replicas = uint(c, "replicas");
  cfg.times = num_list(c, "times");
  cfg.options.tail_cutoff = c.at("tail_cutoff").get<bool>();
  cfg.kde_grid = spatial_grid(c);
  cfg.validate();
  const std::uint64_t seed = uint(c, "seed");

  std::vector<DensityGrid> reference;
  if (cfg.params.chi == 0.0) {
    for (double t : cfg.times) reference.push_back(heat_reference(cfg.initial, cfg.kde_grid, t));
  } else {
    const PdeRun run = pde_solve(cfg.initial, cfg.kde_grid, cfg.grid, num(c, "pde_max_dt"),
                                 cfg.params);
    for (double t : cfg.times) {
      const auto k = static_cast<std::size_t>(std::llround(t / cfg.grid.dt));
      reference.push_back(run.snapshots.at(k).rho);
    }
  }

  // Replica files are keyed by everything that shapes a replica's result.
  json key = c;
  key.erase("output_dir");
  key.erase("n_values");
  key.erase("replicas");
  key.erase("require_decrease");
  const std::string fingerprint = key.dump();
  auto replica_file = [](std::size_t n, std::size_t q) {
    return "replicas/n" + std::to_string(n) + "_q" + std::to_string(q) + ".json";
  };
  std::size_t resumed = 0;
  ChaosCache cache;
  cache.load = [&](std::size_t n, std::size_t q) -> std::optional<ChaosReplica> {
    const auto file = rec.path(replica_file(n, q));
    if (!std::filesystem::exists(file)) return std::nullopt;
    std::ifstream in(file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error&) {
      return std::nullopt;  // partial file from an interrupted run
    }
    auto r = replica_from_json(j, fingerprint);
    if (r) {
      ++resumed;
      rec.add_output(replica_file(n, q));
    }
    return r;
  };
  cache.store = [&](const ChaosReplica& r) {
    rec.write_output(replica_file(r.n, r.replica), replica_to_json(r, fingerprint).dump(1) + "\n");
    log << "replica N=" << r.n << " q=" << r.replica << " w1=" << format_double(r.w1.back())
        << "\n";
  };
  const ChaosReport report = chaos_study(cfg, seed, reference, cache);
  if (resumed > 0) log << "resumed " << resumed << " stored replicas\n";

  rec.write_output("chaos_summary.csv", chaos_summary_csv(report));
  rec.write_output("chaos_replicas.csv", chaos_replicas_csv(report));
  CsvTable decay({"t", "bandwidth", "value", "alt_bandwidth", "alt_value"});
  for (const auto& p : report.l2_decay) {
    decay.add_row({format_double(p.t), format_double(p.bandwidth), format_double(p.value),
                   format_double(p.alt_bandwidth), format_double(p.alt_value)});
  }
  rec.write_output("l2_decay.csv", decay.str());

  const std::size_t last = cfg.times.size() - 1;
  bool decreasing = true;
  for (std::size_t a = 0; a + 1 < cfg.n_values.size(); ++a) {
    const double gap = report.w1_mean[a][last] - report.w1_mean[a + 1][last];
    const double se = std::hypot(report.w1_se[a][last], report.w1_se[a + 1][last]);
    decreasing = decreasing && gap > 2.0 * se;
  }
  log << chaos_summary_csv(report);
  if (c.at("require_decrease").get<bool>() && !decreasing) return kExitCheckFailure;
  return kExitPass;
}

// ---- stochastic -----------------------------------------------------------

const Schema& lemma31_schema() {
  static const Schema s{"lemma31",
                        {{"enabled", FT::boolean, true, "run this estimator"},
                         {"t1", FT::number, 0.0, "window start"},
                         {"windows", FT::number_list, json::array({0.02, 0.04, 0.08, 0.16}),
                          "window lengths t2 - t1"},
                         {"dt", FT::number, 0.005, "time step"},
                         {"horizon", FT::number, 0.5, "T"},
                         {"w_start", FT::number, 0.0, "restart point of w at t1"},
                         {"x_value", FT::number, 0.0, "the fixed path x is constant at this value"},
                         {"n_samples", FT::integer, 10000, "Monte Carlo samples"}}};
  return s;
}

const Schema& exp_moment_schema() {
  static const Schema s{"exp_moment",
                        {{"enabled", FT::boolean, true, "run this estimator"},
                         {"alpha", FT::number, 1.0, "alpha > 0"},
                         {"dt", FT::number, 0.005, "time step"},
                         {"horizon", FT::number, 0.5, "T"},
                         {"w_start", FT::number, 0.0, "start of w"},
                         {"n_samples", FT::integer, 10000, "Monte Carlo samples"},
                         {"y_brownian", FT::boolean, true, "include Y = Brownian motion from 0"},
                         {"y_constants", FT::number_list, json::array({0.0, 5.0}),
                          "constant laws of Y"},
                         {"n_values", FT::integer_list, json::array({8, 32, 128}),
                          "N for the 1/N-scaled variant (Y Brownian)"}}};
  return s;
}

const Schema& girsanov_schema() {
  static const Schema s{"girsanov",
                        {{"enabled", FT::boolean, true, "run this estimator"},
                         {"n_particles", FT::integer, 8, "N"},
                         {"r", FT::integer, 1, "driftless particles (0 = full transform)"},
                         {"dt", FT::number, 1.0 / 256.0, "time step"},
                         {"horizon", FT::number, 0.25, "T"},
                         {"n_replicas", FT::integer, 10000, "independent ensembles"},
                         initial_field()}};
  return s;
}

const Schema& novikov_schema() {
  static const Schema s{"novikov",
                        {{"enabled", FT::boolean, true, "run this estimator"},
                         {"n_particles", FT::integer, 4, "N"},
                         {"dt", FT::number, 1.0 / 256.0, "time step"},
                         {"horizon", FT::number, 0.25, "T"},
                         {"kappa", FT::number_list, json::array({0.5}), "kappa values"},
                         {"n_replicas", FT::integer, 2000, "independent ensembles"},
                         initial_field()}};
  return s;
}

const Schema& stochastic_schema() {
  static const Schema s{
      "stochastic",
      concat(common_fields(), kernel_fields(),
             std::vector<Field>{
                 {"lemma31", FT::object, json::object(), "Lemma 3.1 window scaling",
                  &lemma31_schema()},
                 {"exp_moment", FT::object, json::object(), "exponential moments",
                  &exp_moment_schema()},
                 {"girsanov", FT::object, json::object(), "E Z = 1 check", &girsanov_schema()},
                 {"novikov", FT::object, json::object(), "Novikov probe", &novikov_schema()}})};
  return s;
}

int run_stochastic(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  const KernelParams params = kernel_params(c, /*allow_zero_coupling=*/true);
  const std::uint64_t seed = uint(c, "seed");
  CsvTable table({"estimator", "label", "estimate", "std_error", "n", "max_exponent",
                  "max_weight_fraction", "flags"});
  bool unstable = false;
  bool failed = false;
  auto exp_row = [&](const std::string& est, const std::string& label,
                     const ExpMomentEstimate& e, const std::string& extra = "") {
    std::string flags = e.unstable ? "UNSTABLE" : "";
    if (!extra.empty()) flags += (flags.empty() ? "" : ";") + extra;
    unstable = unstable || e.unstable;
    table.add_row({est, label, format_double(e.estimate), format_double(e.std_error),
                   std::to_string(e.n_samples), format_double(e.max_exponent),
                   format_double(e.max_weight_fraction), flags});
  };

  const json& l = c.at("lemma31");
  if (l.at("enabled").get<bool>()) {
    const TimeGrid grid = time_grid(l);
    Lemma31Config base;
    base.t1 = num(l, "t1");
    base.w_start = num(l, "w_start");
    base.n_samples = uint(l, "n_samples");
    base.seed = derive_seed(seed, 31);
    const std::vector<double> x(grid.n_steps + 1, num(l, "x_value"));
    const auto windows = num_list(l, "windows");
    const ScalingFit fit = lemma31_scaling_study(windows, base, x, grid, params);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& m = fit.estimates[i];
      table.add_row({"lemma31", "window=" + format_double(windows[i]),
                     format_double(m.estimate), format_double(m.std_error),
                     std::to_string(m.n_samples), "", "", ""});
    }
    table.add_row({"lemma31_fit", "slope", format_double(fit.slope), "", "", "", "", ""});
  }

  const json& e = c.at("exp_moment");
  if (e.at("enabled").get<bool>()) {
    ExpMomentConfig cfg;
    cfg.alpha = num(e, "alpha");
    cfg.grid = time_grid(e);
    cfg.w_start = num(e, "w_start");
    cfg.n_samples = uint(e, "n_samples");
    cfg.seed = derive_seed(seed, 33);
    std::vector<YLaw> laws;
    if (e.at("y_brownian").get<bool>()) laws.push_back(YLaw::brownian());
    for (double v : num_list(e, "y_constants")) laws.push_back(YLaw::constant(v));
    for (const YLaw& law : laws) {
      cfg.y_law = law;
      const std::string label = law.kind == YLaw::Kind::brownian
                                    ? "prop33;Y=brownian"
                                    : "prop33;Y=" + format_double(law.value);
      exp_row("exp_moment", label, exp_moment_mc(cfg, params));
    }
    cfg.y_law = YLaw::brownian();
    for (std::size_t n : uint_list(e, "n_values")) {
      cfg.scale_inv_n = n;
      exp_row("exp_moment", "appendix;N=" + std::to_string(n), exp_moment_mc(cfg, params));
    }
  }

  const json& g = c.at("girsanov");
  if (g.at("enabled").get<bool>()) {
    GirsanovCheckConfig cfg;
    cfg.n_particles = uint(g, "n_particles");
    cfg.r = uint(g, "r");
    cfg.grid = time_grid(g);
    cfg.initial = initial_law(g);
    cfg.n_replicas = uint(g, "n_replicas");
    cfg.seed = derive_seed(seed, 42);
    const auto z = girsanov_martingale_check(cfg, params);
    const bool ok = std::fabs(z.estimate - 1.0) <= 3.0 * z.std_error;
    failed = failed || !ok;
    exp_row("girsanov", "E[Z_T^(" + std::to_string(cfg.r) + ")]", z,
            ok ? "within_3se" : "OUTSIDE_3SE");
  }

  const json& nv = c.at("novikov");
  if (nv.at("enabled").get<bool>()) {
    NovikovConfig cfg;
    cfg.n_particles = uint(nv, "n_particles");
    cfg.grid = time_grid(nv);
    cfg.initial = initial_law(nv);
    cfg.n_replicas = uint(nv, "n_replicas");
    cfg.seed = derive_seed(seed, 41);
    for (double kappa : num_list(nv, "kappa")) {
      cfg.kappa = kappa;
      exp_row("novikov", "kappa=" + format_double(kappa), novikov_probe(cfg, params));
    }
  }

  rec.write_output("estimates.csv", table.str());
  log << table.str();
  if (unstable) {
    log << "warning: at least one estimate is UNSTABLE (dominated by a single sample)\n";
    return kExitInstability;
  }
  return failed ? kExitCheckFailure : kExitPass;
}

// ---- bench ----------------------------------------------------------------

const Schema& bench_schema() {
  static const Schema s{
      "bench",
      concat(common_fields(), kernel_fields(),
             std::vector<Field>{initial_field(),
                                {"n_values", FT::integer_list, json::array({32, 64, 128}),
                                 "ensemble sizes"},
                                {"dt", FT::number, 0.01, "time step"},
                                {"horizon", FT::number, 0.25, "final time"},
                                {"agreement_tolerance", FT::number, 1e-12,
                                 "max final-position gap between cutoff on and off"}})};
  return s;
}

int run_bench(const json& c, RunRecorder& rec, std::ostream& log) {
  check_schema_version(c);
  const KernelParams params = kernel_params(c, /*allow_zero_coupling=*/false);
  const InitialLaw law = initial_law(c);
  const TimeGrid grid = time_grid(c);
  const std::uint64_t seed = uint(c, "seed");
  const double tol = num(c, "agreement_tolerance");
  CsvTable results({"n", "kernel_calls_cutoff", "skipped_slabs", "kernel_calls_full",
                    "max_final_gap", "result"});
  CsvTable timing({"n", "seconds_cutoff", "seconds_full", "ns_per_kernel_call"});
  bool all_pass = true;
  for (std::size_t n : uint_list(c, "n_values")) {
    require_positive(n, "n_values entries");
    using clock = std::chrono::steady_clock;
    DriftStats on, off;
    const auto t0 = clock::now();
    const auto a = simulate(n, grid, law, params, seed, DriftOptions{true}, &on);
    const auto t1 = clock::now();
    const auto b = simulate(n, grid, law, params, seed, DriftOptions{false}, &off);
    const auto t2 = clock::now();
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gap = std::max(gap, std::fabs(a.path(i).back() - b.path(i).back()));
    }
    const bool pass = gap <= tol && on.kernel_calls + on.skipped_slabs == off.kernel_calls;
    all_pass = all_pass && pass;
    results.add_row({std::to_string(n), std::to_string(on.kernel_calls),
                     std::to_string(on.skipped_slabs), std::to_string(off.kernel_calls),
                     format_double(gap), yes_no(pass)});
    const double s_on = std::chrono::duration<double>(t1 - t0).count();
    const double s_off = std::chrono::duration<double>(t2 - t1).count();
    timing.add_row({std::to_string(n), format_double(s_on), format_double(s_off),
                    format_double(off.kernel_calls ? 1e9 * s_off / off.kernel_calls : 0.0)});
    log << "N=" << n << " cutoff " << s_on << " s, full " << s_off << " s, gap "
        << format_double(gap) << "\n";
  }
  rec.write_output("bench.csv", results.str());
  rec.write_output("bench_timing.csv", timing.str(), /*deterministic=*/false);
  return all_pass ? kExitPass : kExitCheckFailure;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> list{
      {"kernel-check", "Kernel norm-scaling and erf time-integral checks",
       &kernel_check_schema(), &run_kernel_check},
      {"simulate", "Simulate the N-particle system and dump paths", &simulate_schema(),
       &run_simulate},
      {"pde", "Solve the Keller-Segel PDE and write density snapshots", &pde_schema(),
       &run_pde},
      {"chaos", "Propagation-of-chaos study: W1 between particles and the PDE",
       &chaos_schema(), &run_chaos},
      {"stochastic", "Lemma 3.1, exponential moments, Girsanov and Novikov estimators",
       &stochastic_schema(), &run_stochastic},
      {"bench", "Drift timing with tail cutoff on and off", &bench_schema(), &run_bench},
  };
  return list;
}

}  // namespace chemo::cli
