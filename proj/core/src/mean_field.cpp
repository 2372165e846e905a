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

#include "chemo/mean_field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

#include "chemo/error.hpp"
#include "chemo/text_io.hpp"

namespace chemo {
namespace {

// Solves (diag_i) u_i - r u_{i-1} - r u_{i+1} = rhs_i with Neumann ends, i.e.
// the backward-Euler matrix of (r / dt) * discrete Laplacian plus `decay`.
void implicit_diffusion(std::span<double> u, double r, double decay) {
  const std::size_t n = u.size();
  std::vector<double> c_prime(n);
  const double end_diag = 1.0 + r + decay;
  const double mid_diag = 1.0 + 2.0 * r + decay;
  double denom = end_diag;
  c_prime[0] = -r / denom;
  u[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    const double diag = (i + 1 == n) ? end_diag : mid_diag;
    denom = diag + r * c_prime[i - 1];
    c_prime[i] = -r / denom;
    u[i] = (u[i] + r * u[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) u[i] -= c_prime[i] * u[i + 1];
}

double boundary_density(const DensityGrid& rho) {
  return std::max(std::fabs(rho.values.front()), std::fabs(rho.values.back()));
}

std::mutex& fftw_planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

// Real-to-complex transforms of one fixed length; buffers are reused.
class RealFft {
 public:
  explicit RealFft(std::size_t length)
      : length_(length),
        real_(static_cast<double*>(fftw_malloc(sizeof(double) * length))),
        spectrum_(static_cast<fftw_complex*>(
            fftw_malloc(sizeof(fftw_complex) * (length / 2 + 1)))) {
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(length), real_.get(),
                                    spectrum_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(length), spectrum_.get(),
                                     real_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t spectrum_size() const noexcept { return length_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> data) {
    std::fill(real_.get(), real_.get() + length_, 0.0);
    std::copy(data.begin(), data.end(), real_.get());
    fftw_execute(forward_);
    std::vector<std::complex<double>> out(spectrum_size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {spectrum_.get()[i][0], spectrum_.get()[i][1]};
    }
    return out;
  }

  // Unnormalised inverse; caller divides by length.
  std::vector<double> backward(std::span<const std::complex<double>> spectrum) {
    for (std::size_t i = 0; i < spectrum_size(); ++i) {
      spectrum_.get()[i][0] = spectrum[i].real();
      spectrum_.get()[i][1] = spectrum[i].imag();
    }
    fftw_execute(backward_);
    return std::vector<double>(real_.get(), real_.get() + length_);
  }

 private:
  std::size_t length_;
  std::unique_ptr<double, FftwFree> real_;
  std::unique_ptr<fftw_complex, FftwFree> spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

void SpatialGrid::validate() const {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw ConfigError("SpatialGrid: need finite x_min < x_max");
  }
  if (n_cells < 16) throw ConfigError("SpatialGrid: need n_cells >= 16");
}

double DensityGrid::mass() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.h();
}

double DensityGrid::l1_distance(const DensityGrid& other) const {
  if (!(grid == other.grid)) throw ConfigError("l1_distance: grid mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += std::fabs(values[i] - other.values[i]);
  }
  return sum * grid.h();
}

double DensityGrid::l2_norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum * grid.h());
}

double DensityGrid::max_abs_asymmetry() const {
  double worst = 0.0;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    worst = std::max(worst, std::fabs(values[i] - values[n - 1 - i]));
  }
  return worst;
}

double DensityGrid::value_at(double x) const {
  const double pos = (x - grid.x_min) / grid.h() - 0.5;
  if (pos < -0.5 || pos > static_cast<double>(grid.n_cells) - 0.5) return 0.0;
  if (pos <= 0.0) return values.front();
  if (pos >= static_cast<double>(grid.n_cells - 1)) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

std::vector<double> DensityGrid::edge_cdf() const {
  std::vector<double> cdf(values.size() + 1, 0.0);
  const double h = grid.h();
  for (std::size_t i = 0; i < values.size(); ++i) {
    cdf[i + 1] = cdf[i] + values[i] * h;
  }
  return cdf;
}

PdeState pde_initial_state(const InitialLaw& initial, const SpatialGrid& grid,
                           const PdeOptions& options) {
  grid.validate();
  PdeState state;
  state.rho.grid = grid;
  state.rho.values.resize(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    state.rho.values[i] = initial.density(grid.center(i));
  }
  const double mass = state.rho.mass();
  if (!(mass > 0.0)) throw ConfigError("initial density has no mass on grid");
  for (double& v : state.rho.values) v /= mass;
  if (boundary_density(state.rho) >= options.initial_boundary_tolerance) {
    std::ostringstream msg;
    msg << "domain [" << grid.x_min << ", " << grid.x_max
        << "] too small: initial boundary density " << boundary_density(state.rho)
        << " exceeds " << options.initial_boundary_tolerance;
    throw ConfigError(msg.str());
  }
  state.c.assign(grid.n_cells, 0.0);
  return state;
}

PdeState pde_step(const PdeState& state, double dt, const KernelParams& params,
                  const PdeOptions& options, PdeStepReport* report) {
  params.validate(/*allow_zero_coupling=*/true);
  const SpatialGrid& grid = state.rho.grid;
  const double h = grid.h();
  if (!(dt > 0.0) || dt > h * h * (1.0 + 1e-12)) {
    throw ConfigError("pde_step: need 0 < dt <= h^2");
  }
  const std::size_t n = grid.n_cells;
  const double r = dt / (2.0 * h * h);
  const double mass_before = state.rho.mass();

  PdeState next;
  next.time = state.time + dt;
  next.rho.grid = grid;

  // c: (1 + lambda dt - dt/2 Laplacian) c^{n+1} = c^n + dt rho^n
  next.c = state.c;
  for (std::size_t i = 0; i < n; ++i) next.c[i] += dt * state.rho.values[i];
  implicit_diffusion(next.c, r, params.lambda * dt);

  // rho: explicit upwind flux with velocity chi dc/dx at interior faces
  std::vector<double> rho = state.rho.values;
  if (params.chi != 0.0) {
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t f = 1; f < n; ++f) {
      const double v = params.chi * (next.c[f] - next.c[f - 1]) / h;
      flux[f] = v > 0.0 ? v * state.rho.values[f - 1] : v * state.rho.values[f];
    }
    const double ratio = dt / h;
    for (std::size_t i = 0; i < n; ++i) rho[i] -= ratio * (flux[i + 1] - flux[i]);
  }
  implicit_diffusion(rho, r, 0.0);

  double min_density = *std::min_element(rho.begin(), rho.end());
  double clipped = 0.0;
  if (min_density < 0.0) {
    if (min_density < -options.negativity_tolerance) {
      throw NumericalInstability("pde_step: density dropped to " +
                                 format_double(min_density));
    }
    for (double& v : rho) {
      if (v < 0.0) {
        clipped -= v * h;
        v = 0.0;
      }
    }
    if (clipped > options.clip_mass_tolerance) {
      throw NumericalInstability("pde_step: clipping removed too much mass");
    }
  }
  next.rho.values = std::move(rho);
  if (clipped > 0.0) {
    const double scale = mass_before / next.rho.mass();
    for (double& v : next.rho.values) v *= scale;
  }
  for (double v : next.c) {
    if (!std::isfinite(v)) throw NumericalInstability("pde_step: c not finite");
  }
  if (report) {
    report->mass_change = std::fabs(next.rho.mass() - mass_before);
    report->min_density = min_density;
    report->clipped_mass = clipped;
  }
  return next;
}

PdeRun pde_solve(const InitialLaw& initial, const SpatialGrid& grid,
                 const TimeGrid& times, double max_dt,
                 const KernelParams& params, const PdeOptions& options) {
  times.validate();
  if (!(max_dt > 0.0)) throw ConfigError("pde_solve: max_dt must be positive");
  const double h = grid.h();
  const double limit = std::min(max_dt, h * h);
  PdeRun run;
  run.substeps = static_cast<std::size_t>(std::ceil(times.dt / limit * (1.0 - 1e-12)));
  run.substeps = std::max<std::size_t>(run.substeps, 1);
  run.pde_dt = times.dt / static_cast<double>(run.substeps);

  PdeState state = pde_initial_state(initial, grid, options);
  const double mass0 = state.rho.mass();
  run.min_density = *std::min_element(state.rho.values.begin(), state.rho.values.end());
  run.snapshots.reserve(times.n_steps + 1);
  run.snapshots.push_back(state);
  for (std::size_t k = 0; k < times.n_steps; ++k) {
    for (std::size_t s = 0; s < run.substeps; ++s) {
      PdeStepReport report;
      state = pde_step(state, run.pde_dt, params, options, &report);
      run.max_step_mass_change = std::max(run.max_step_mass_change, report.mass_change);
      run.max_clipped_mass = std::max(run.max_clipped_mass, report.clipped_mass);
      run.min_density = std::min(run.min_density, report.min_density);
    }
    state.time = times.time(k + 1);
    if (boundary_density(state.rho) >= options.boundary_tolerance) {
      throw NumericalInstability(
          "pde_solve: density reached the truncated boundary at t = " +
          format_double(state.time) + "; enlarge the domain");
    }
    run.cumulative_mass_drift =
        std::max(run.cumulative_mass_drift, std::fabs(state.rho.mass() - mass0));
    run.snapshots.push_back(state);
  }
  return run;
}

DensitySeries DensitySeries::from_run(const PdeRun& run, const TimeGrid& times) {
  if (run.snapshots.size() != times.n_steps + 1) {
    throw ConfigError("DensitySeries: snapshot count does not match time grid");
  }
  DensitySeries series;
  series.grid = run.snapshots.front().rho.grid;
  series.times = times;
  series.rho.reserve(run.snapshots.size());
  for (const auto& s : run.snapshots) series.rho.push_back(s.rho.values);
  return series;
}

double nl_drift_from_density(const DensitySeries& series, std::size_t k, double x,
                             const KernelParams& params) {
  if (k >= series.rho.size()) {
    throw ConfigError("nl_drift_from_density: snapshots do not cover t_k");
  }
  const HistorySum slabs(series.times, k, params, DriftOptions{false});
  const double h = series.grid.h();
  double total = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    const auto& rho = series.rho[m];
    double inner = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (rho[j] == 0.0) continue;
      inner += rho[j] * slabs.slab(m, x - series.grid.center(j));
    }
    total += h * inner;
  }
  return total;
}

MeanFieldDrift::MeanFieldDrift(const DensitySeries& series,
                               const KernelParams& params)
    : series_(&series), params_(params) {
  const std::size_t n = series.grid.n_cells;
  const std::size_t steps = series.rho.size();
  const double h = series.grid.h();
  std::size_t length = 1;
  while (length < 2 * n) length <<= 1;
  RealFft fft(length);

  std::vector<std::vector<std::complex<double>>> rho_hat(steps);
  for (std::size_t m = 0; m < steps; ++m) rho_hat[m] = fft.forward(series.rho[m]);

  // Slab kernel for lag d = k - m >= 1 sampled at offsets o h, wrapped.
  std::vector<std::vector<std::complex<double>>> kernel_hat(steps);
  std::vector<double> wrapped(length);
  for (std::size_t d = 1; d < steps; ++d) {
    const HistorySum lag(series.times, d, params, DriftOptions{false});
    std::fill(wrapped.begin(), wrapped.end(), 0.0);
    for (std::size_t o = 0; o < n; ++o) {
      const double y = static_cast<double>(o) * h;
      const double value = lag.slab(0, y);  // slab m = 0 of step d has lag d
      wrapped[o] = value;
      if (o > 0) wrapped[length - o] = -value;
    }
    kernel_hat[d] = fft.forward(wrapped);
  }

  fields_.assign(steps, std::vector<double>(n, 0.0));
  std::vector<std::complex<double>> acc(fft.spectrum_size());
  const double norm = h / static_cast<double>(length);
  for (std::size_t k = 1; k < steps; ++k) {
    std::fill(acc.begin(), acc.end(), std::complex<double>{});
    for (std::size_t d = 1; d <= k; ++d) {
      const auto& g = kernel_hat[d];
      const auto& r = rho_hat[k - d];
      for (std::size_t f = 0; f < acc.size(); ++f) acc[f] += g[f] * r[f];
    }
    const auto conv = fft.backward(acc);
    for (std::size_t i = 0; i < n; ++i) fields_[k][i] = conv[i] * norm;
  }
}

double MeanFieldDrift::operator()(std::size_t k, double x) const {
  const auto& grid = series_->grid;
  const double pos = (x - grid.x_min) / grid.h() - 0.5;
  if (pos < 0.0 || pos > static_cast<double>(grid.n_cells - 1)) {
    return nl_drift_from_density(*series_, k, x, params_);
  }
  const auto& f = fields_.at(k);
  const auto i = std::min(static_cast<std::size_t>(pos), grid.n_cells - 2);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * f[i] + w * f[i + 1];
}

PathEnsemble nl_sde_simulate(std::size_t n_copies, const TimeGrid& grid,
                             const InitialLaw& initial,
                             const DensitySeries& series,
                             const KernelParams& params, std::uint64_t seed) {
  grid.validate();
  params.validate(/*allow_zero_coupling=*/true);
  if (series.times.dt != grid.dt || series.rho.size() < grid.n_steps + 1) {
    throw ConfigError("nl_sde_simulate: snapshots do not match the time grid");
  }
  if (n_copies < 1) throw ConfigError("nl_sde_simulate: need at least one copy");
  const bool coupled = params.chi != 0.0;
  std::unique_ptr<MeanFieldDrift> drift;
  if (coupled) drift = std::make_unique<MeanFieldDrift>(series, params);

  const auto x0 = draw_initial(n_copies, initial, seed);
  const NoiseSource noise = counter_noise(seed);
  const double sqrt_dt = std::sqrt(grid.dt);
  const std::size_t n_times = grid.n_steps + 1;
  std::vector<double> positions(n_copies * n_times);
  std::vector<double> increments(n_copies * grid.n_steps);
  const double chi = params.chi;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_copies); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double* row = positions.data() + c * n_times;
    row[0] = x0[c];
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      const double b = (coupled && k > 0) ? chi * (*drift)(k, row[k]) : 0.0;
      const double dw = sqrt_dt * noise(c, k);
      increments[c * grid.n_steps + k] = dw;
      row[k + 1] = row[k] + b * grid.dt + dw;
    }
  }
  PathEnsemble out(n_copies, grid, seed);
  out.load(std::move(positions), std::move(increments));
  return out;
}

void write_snapshots_csv(const std::filesystem::path& file,
                         const std::vector<PdeState>& snapshots) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << "t,x,rho,c\n";
  for (const auto& s : snapshots) {
    const std::string t = format_double(s.time);
    for (std::size_t i = 0; i < s.rho.values.size(); ++i) {
      out << t << ',' << format_double(s.rho.grid.center(i)) << ','
          << format_double(s.rho.values[i]) << ',' << format_double(s.c[i])
          << '\n';
    }
  }
}

void write_snapshots_binary(const std::filesystem::path& file,
                            const std::vector<PdeState>& snapshots) {
  if (snapshots.empty()) throw StateError("no snapshots to write");
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  const auto& grid = snapshots.front().rho.grid;
  write_u64_le(out, snapshots.size());
  write_u64_le(out, grid.n_cells);
  write_f64_le(out, grid.x_min);
  write_f64_le(out, grid.x_max);
  for (const auto& s : snapshots) {
    write_f64_le(out, s.time);
    write_f64_block_le(out, s.rho.values);
    write_f64_block_le(out, s.c);
  }
}

std::vector<PdeState> read_snapshots_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + file.string());
  const auto count = read_u64_le(in);
  SpatialGrid grid;
  grid.n_cells = read_u64_le(in);
  grid.x_min = read_f64_le(in);
  grid.x_max = read_f64_le(in);
  grid.validate();
  std::vector<PdeState> out(count);
  for (auto& s : out) {
    s.time = read_f64_le(in);
    s.rho.grid = grid;
    s.rho.values = read_f64_block_le(in, grid.n_cells);
    s.c = read_f64_block_le(in, grid.n_cells);
  }
  return out;
}

}  // namespace chemo
