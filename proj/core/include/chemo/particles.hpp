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
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chemo/kernel.hpp"
#include "chemo/rng.hpp"

namespace chemo {

// Uniform discretisation t_k = k dt of [0, n_steps dt].
struct TimeGrid {
  double dt = 0.0;
  std::size_t n_steps = 0;

  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
  double horizon() const noexcept { return time(n_steps); }
  void validate() const;

  // n_steps = round(horizon / dt); throws ConfigError if horizon is not an
  // integer multiple of dt to 1e-9 relative.
  static TimeGrid from_horizon(double horizon, double dt);
};

// Law of the i.i.d. initial positions. Every variant has a density.
class InitialLaw {
 public:
  struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
  };
  struct Uniform {
    double lo = -1.0;
    double hi = 1.0;
  };
  // weight * N(mean1, sd1^2) + (1 - weight) * N(mean2, sd2^2)
  struct TwoBump {
    double weight = 0.5;
    double mean1 = -1.0;
    double stddev1 = 0.5;
    double mean2 = 1.0;
    double stddev2 = 0.5;
  };
  using Kind = std::variant<Gaussian, Uniform, TwoBump>;

  InitialLaw() : kind_(Gaussian{}) {}
  explicit InitialLaw(Kind kind);

  static InitialLaw gaussian(double mean, double stddev);
  static InitialLaw uniform(double lo, double hi);
  static InitialLaw two_bump(double weight, double mean1, double stddev1,
                             double mean2, double stddev2);

  const Kind& kind() const noexcept { return kind_; }
  std::string describe() const;

  double density(double x) const;
  double mean() const;
  double variance() const;
  // True when density(x) == density(2 * mean - x) exactly as a law.
  bool symmetric() const;

  // Density and CDF of X_0 + W_t (the law convolved with N(0, t)); t = 0
  // gives the law itself.
  double evolved_density(double t, double x) const;
  double evolved_cdf(double t, double x) const;

  // One draw for `particle` from the given stream family.
  double sample(const CounterRng& rng, std::uint64_t particle) const;

 private:
  Kind kind_;
};

// Full history of N trajectories on a TimeGrid. Positions are stored
// particle-major: path(i) is the contiguous row X^i_{t_0..t_n}.
class PathEnsemble {
 public:
  PathEnsemble(std::size_t n_particles, TimeGrid grid, std::uint64_t seed = 0);

  std::size_t n_particles() const noexcept { return n_particles_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t n_times() const noexcept { return grid_.n_steps + 1; }

  // Number of time rows filled so far (0 before initialisation).
  std::size_t filled_rows() const noexcept { return filled_rows_; }
  bool complete() const noexcept { return filled_rows_ == n_times(); }
  bool has_increments() const noexcept { return has_increments_; }

  double position(std::size_t i, std::size_t k) const {
    return positions_[i * n_times() + k];
  }
  std::span<const double> path(std::size_t i) const {
    return {positions_.data() + i * n_times(), n_times()};
  }
  // Brownian increments dW^i_k = W^i_{t_{k+1}} - W^i_{t_k}, k < n_steps.
  std::span<const double> increments(std::size_t i) const {
    return {increments_.data() + i * grid_.n_steps, grid_.n_steps};
  }
  std::span<const double> positions() const noexcept { return positions_; }

  // Positions at step k for every particle (copied out of the row-major
  // store).
  std::vector<double> marginal(std::size_t k) const;

  // Fills row 0. Throws StateError if already initialised.
  void set_initial(std::span<const double> x0);
  // Appends row k + 1 given the row's positions and the increments used.
  void push_row(std::span<const double> next, std::span<const double> dw);
  // Bulk load used by the dump reader. `increments` may be empty.
  void load(std::vector<double> positions, std::vector<double> increments);

 private:
  std::size_t n_particles_;
  TimeGrid grid_;
  std::uint64_t seed_;
  std::size_t filled_rows_ = 0;
  bool has_increments_ = true;
  std::vector<double> positions_;
  std::vector<double> increments_;
};

struct DriftOptions {
  // Skip slabs with |x| >= 8 sqrt(2 (t_k - t_m)); their erf difference is
  // below 1e-28.
  bool tail_cutoff = true;
};

// Work counters for the history sums.
struct DriftStats {
  std::uint64_t kernel_calls = 0;
  std::uint64_t skipped_slabs = 0;

  DriftStats& operator+=(const DriftStats& other) noexcept {
    kernel_calls += other.kernel_calls;
    skipped_slabs += other.skipped_slabs;
    return *this;
  }
};

// Slab weights of the memory integral at step k:
//   sum_{m < k} int_{t_k - t_{m+1}}^{t_k - t_m} K_u(x_now - y_m) du
// with the history point y_m frozen on each slab [t_m, t_{m+1}].
class HistorySum {
 public:
  HistorySum(const TimeGrid& grid, std::size_t k, const KernelParams& params,
             const DriftOptions& options = {});

  std::size_t step() const noexcept { return k_; }

  // history must hold at least k entries; only the first k are read.
  double operator()(double x_now, std::span<const double> history,
                    DriftStats* stats = nullptr) const;

  // Contribution of slab m alone.
  double slab(std::size_t m, double x) const;

 private:
  std::size_t k_;
  KernelParams params_;
  bool tail_cutoff_;
  std::vector<double> inv_near_;  // 1/sqrt(2 (t_k - t_{m+1}))
  std::vector<double> inv_far_;   // 1/sqrt(2 (t_k - t_m))
  std::vector<double> near_;      // t_k - t_{m+1}
  std::vector<double> far_;       // t_k - t_m
};

// b_i(t_k) = (chi / N) sum_{j in [source_begin, source_end), j != i}
//            1{X^i_k != X^j_k} HistorySum(X^i_k; X^j_{0..k-1}).
// Sources are summed in ascending j.
double interaction_drift(const PathEnsemble& ensemble, const HistorySum& sum,
                         std::size_t i, std::size_t source_begin,
                         std::size_t source_end, DriftStats* stats = nullptr);

// Drift of particle i at step k in the fully interacting system.
double drift_eval(std::size_t i, std::size_t k, const PathEnsemble& ensemble,
                  const KernelParams& params, const DriftOptions& options = {});

// Standard normal draw for (particle, step).
using NoiseSource = std::function<double(std::size_t, std::size_t)>;

// Counter-based Brownian noise keyed by seed: N(0,1) for (particle, step).
NoiseSource counter_noise(std::uint64_t seed);

// Which particles carry drift, and which particles they feel.
// driftless_count = 0 is the fully interacting system; r > 0 makes particles
// 0..r-1 Brownian and couples the others only among themselves.
struct DriftLayout {
  std::size_t driftless_count = 0;
};

// One Euler-Maruyama step: fills row k + 1 from rows 0..k.
DriftStats step(PathEnsemble& ensemble, std::size_t k, const KernelParams& params,
                const NoiseSource& noise, const DriftLayout& layout = {},
                const DriftOptions& options = {});

// Initial positions: i.i.d. draws from `initial` keyed by (seed, particle).
std::vector<double> draw_initial(std::size_t n_particles,
                                 const InitialLaw& initial, std::uint64_t seed);

struct SimulationResult {
  PathEnsemble ensemble;
  DriftStats stats;
};

// Runs the scheme from given initial positions and noise.
SimulationResult simulate_from(std::span<const double> x0, const TimeGrid& grid,
                               const KernelParams& params,
                               const NoiseSource& noise,
                               const DriftLayout& layout = {},
                               const DriftOptions& options = {},
                               std::uint64_t seed_record = 0);

// The N-particle system started from i.i.d. draws of `initial`.
PathEnsemble simulate(std::size_t n_particles, const TimeGrid& grid,
                      const InitialLaw& initial, const KernelParams& params,
                      std::uint64_t seed, const DriftOptions& options = {},
                      DriftStats* stats = nullptr);

// Particles 0..r-1 are Brownian, the rest interact only with each other.
PathEnsemble simulate_partial_driftless(std::size_t r, std::size_t n_particles,
                                        const TimeGrid& grid,
                                        const InitialLaw& initial,
                                        const KernelParams& params,
                                        std::uint64_t seed,
                                        const DriftOptions& options = {});

// X_0 + W on the grid with the same streams as simulate(); no drift code
// involved.
PathEnsemble brownian_reference(std::size_t n_particles, const TimeGrid& grid,
                                const InitialLaw& initial, std::uint64_t seed);

// Strong self-convergence probe: runs dt and dt/2 with coupled noise (coarse
// increment = sum of the two fine ones) from the same initial positions.
struct SelfConvergence {
  double dt_coarse = 0.0;
  double rms_final_gap = 0.0;
  double max_final_gap = 0.0;
};
SelfConvergence self_convergence(std::size_t n_particles, const TimeGrid& coarse,
                                 const InitialLaw& initial,
                                 const KernelParams& params, std::uint64_t seed,
                                 const DriftOptions& options = {});

}  // namespace chemo
