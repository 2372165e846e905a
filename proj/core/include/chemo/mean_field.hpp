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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chemo/kernel.hpp"
#include "chemo/particles.hpp"

namespace chemo {

// Cell-centred uniform grid on [x_min, x_max] with n_cells cells.
struct SpatialGrid {
  double x_min = -8.0;
  double x_max = 8.0;
  std::size_t n_cells = 1600;

  double h() const noexcept {
    return (x_max - x_min) / static_cast<double>(n_cells);
  }
  double center(std::size_t i) const noexcept {
    return x_min + (static_cast<double>(i) + 0.5) * h();
  }
  void validate() const;
  bool operator==(const SpatialGrid&) const = default;
};

// Nonnegative cell averages of a probability density.
struct DensityGrid {
  SpatialGrid grid;
  std::vector<double> values;

  double mass() const;
  double l1_distance(const DensityGrid& other) const;
  double l2_norm() const;
  double max_abs_asymmetry() const;  // max_i |rho_i - rho_{n-1-i}|
  // Linear interpolation between cell centres, 0 outside the grid.
  double value_at(double x) const;
  // CDF at the cell edges x_min + i h, i = 0..n (piecewise-constant density).
  std::vector<double> edge_cdf() const;
};

// (rho, c) of the parabolic-parabolic system with alpha = 1 at one time.
struct PdeState {
  DensityGrid rho;
  std::vector<double> c;
  double time = 0.0;
};

struct PdeOptions {
  // Domain guard: the initial density at the two boundary cells must be
  // below this.
  double initial_boundary_tolerance = 1e-10;
  // Same guard applied to every later snapshot.
  double boundary_tolerance = 1e-6;
  // Pre-clip negativity and mass adjustment tolerated per step.
  double negativity_tolerance = 1e-12;
  double clip_mass_tolerance = 1e-10;
};

struct PdeStepReport {
  double mass_change = 0.0;  // |mass after - mass before|
  double min_density = 0.0;  // before clipping
  double clipped_mass = 0.0;
};

// Discretises the initial law at the cell centres, renormalised to unit
// mass, with c = 0. Throws ConfigError if the truncated domain leaves more
// than options.initial_boundary_tolerance at the boundary.
PdeState pde_initial_state(const InitialLaw& initial, const SpatialGrid& grid,
                           const PdeOptions& options = {});

// One IMEX step: implicit diffusion for c (source rho^n) and for rho, explicit
// upwind chemotactic flux chi * rho * dc/dx, zero flux at both ends.
// Requires dt <= h^2.
PdeState pde_step(const PdeState& state, double dt, const KernelParams& params,
                  const PdeOptions& options = {},
                  PdeStepReport* report = nullptr);

struct PdeRun {
  std::vector<PdeState> snapshots;  // one per particle time t_0..t_n
  double pde_dt = 0.0;
  std::size_t substeps = 0;
  double max_step_mass_change = 0.0;
  double cumulative_mass_drift = 0.0;
  double max_clipped_mass = 0.0;
  double min_density = 0.0;
};

// Integrates to times.horizon() with the largest PDE step <= max_dt that
// divides times.dt, storing a snapshot at every t_k.
PdeRun pde_solve(const InitialLaw& initial, const SpatialGrid& grid,
                 const TimeGrid& times, double max_dt,
                 const KernelParams& params, const PdeOptions& options = {});

// Densities frozen at the particle times t_0..t_n; the input of the
// mean-field drift.
struct DensitySeries {
  SpatialGrid grid;
  TimeGrid times;
  std::vector<std::vector<double>> rho;  // rho[k][cell]

  static DensitySeries from_run(const PdeRun& run, const TimeGrid& times);
};

// sum_{m < k} (G_m * rho_{t_m})(x) with G_m(y) = int_{t_k - t_{m+1}}^{t_k - t_m}
// K_u(y) du, by direct summation over cells. Density is 0 off the grid.
double nl_drift_from_density(const DensitySeries& series, std::size_t k, double x,
                             const KernelParams& params);

// The same drift at every cell centre for every step, through FFT
// convolution. field(k)[i] is the drift at centre i and time t_k.
class MeanFieldDrift {
 public:
  MeanFieldDrift(const DensitySeries& series, const KernelParams& params);

  std::size_t n_steps() const noexcept { return fields_.size(); }
  std::span<const double> field(std::size_t k) const { return fields_.at(k); }
  // Linear interpolation inside the centre range, direct summation outside.
  double operator()(std::size_t k, double x) const;

 private:
  const DensitySeries* series_;
  KernelParams params_;
  std::vector<std::vector<double>> fields_;
};

// i.i.d. copies of the nonlinear process driven by the frozen PDE density.
// Streams follow the particle_sim contract: copy c uses stream c.
PathEnsemble nl_sde_simulate(std::size_t n_copies, const TimeGrid& grid,
                             const InitialLaw& initial,
                             const DensitySeries& series,
                             const KernelParams& params, std::uint64_t seed);

// Tabular (t, x, rho, c) export, one row per cell per snapshot.
void write_snapshots_csv(const std::filesystem::path& file,
                         const std::vector<PdeState>& snapshots);

// Binary export, little-endian:
//   u64 n_snapshots | u64 n_cells | f64 x_min | f64 x_max
//   then per snapshot: f64 t | f64 rho[n_cells] | f64 c[n_cells]
void write_snapshots_binary(const std::filesystem::path& file,
                            const std::vector<PdeState>& snapshots);
std::vector<PdeState> read_snapshots_binary(const std::filesystem::path& file);

}  // namespace chemo
