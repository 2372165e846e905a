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

#include "chemo/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chemo/error.hpp"

namespace chemo {
namespace {

constexpr double kTailCutoff = 8.0;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double gaussian_density(double mean, double var, double x) {
  const double z = (x - mean) / std::sqrt(var);
  return normal_pdf(z) / std::sqrt(var);
}

double gaussian_cdf(double mean, double var, double x) {
  return normal_cdf((x - mean) / std::sqrt(var));
}

// Antiderivative of the standard normal CDF scaled by s: d/dy psi(y) = Phi(y/s).
double integrated_normal_cdf(double y, double s) {
  return y * normal_cdf(y / s) + s * normal_pdf(y / s);
}

}  // namespace

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("TimeGrid: dt must be positive and finite");
  }
  if (n_steps < 1) {
    throw ConfigError("TimeGrid: n_steps must be >= 1");
  }
}

TimeGrid TimeGrid::from_horizon(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("TimeGrid: horizon and dt must be positive");
  }
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::fabs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("TimeGrid: horizon must be an integer multiple of dt");
  }
  TimeGrid grid{dt, static_cast<std::size_t>(steps)};
  grid.validate();
  return grid;
}

// ---------------------------------------------------------------------------

InitialLaw::InitialLaw(Kind kind) : kind_(kind) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          if (!(k.stddev > 0.0) || !std::isfinite(k.mean))
            throw ConfigError("gaussian initial law needs stddev > 0");
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (!(k.hi > k.lo) || !std::isfinite(k.lo) || !std::isfinite(k.hi))
            throw ConfigError("uniform initial law needs lo < hi");
        } else {
          if (!(k.weight > 0.0 && k.weight < 1.0))
            throw ConfigError("two-bump initial law needs 0 < weight < 1");
          if (!(k.stddev1 > 0.0) || !(k.stddev2 > 0.0))
            throw ConfigError("two-bump initial law needs positive stddevs");
        }
      },
      kind_);
}

InitialLaw InitialLaw::gaussian(double mean, double stddev) {
  return InitialLaw(Gaussian{mean, stddev});
}

InitialLaw InitialLaw::uniform(double lo, double hi) {
  return InitialLaw(Uniform{lo, hi});
}

InitialLaw InitialLaw::two_bump(double weight, double mean1, double stddev1,
                                double mean2, double stddev2) {
  return InitialLaw(TwoBump{weight, mean1, stddev1, mean2, stddev2});
}

std::string InitialLaw::describe() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&out](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          out << "gaussian(mean=" << k.mean << ",stddev=" << k.stddev << ")";
        } else if constexpr (std::is_same_v<T, Uniform>) {
          out << "uniform(lo=" << k.lo << ",hi=" << k.hi << ")";
        } else {
          out << "two_bump(weight=" << k.weight << ",mean1=" << k.mean1
              << ",stddev1=" << k.stddev1 << ",mean2=" << k.mean2
              << ",stddev2=" << k.stddev2 << ")";
        }
      },
      kind_);
  return out.str();
}

double InitialLaw::density(double x) const { return evolved_density(0.0, x); }

double InitialLaw::mean() const {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return k.mean;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return 0.5 * (k.lo + k.hi);
        } else {
          return k.weight * k.mean1 + (1.0 - k.weight) * k.mean2;
        }
      },
      kind_);
}

double InitialLaw::variance() const {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return k.stddev * k.stddev;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return (k.hi - k.lo) * (k.hi - k.lo) / 12.0;
        } else {
          const double m = k.weight * k.mean1 + (1.0 - k.weight) * k.mean2;
          const double second =
              k.weight * (k.stddev1 * k.stddev1 + k.mean1 * k.mean1) +
              (1.0 - k.weight) * (k.stddev2 * k.stddev2 + k.mean2 * k.mean2);
          return second - m * m;
        }
      },
      kind_);
}

bool InitialLaw::symmetric() const {
  return std::visit(
      [](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TwoBump>) {
          return k.weight == 0.5 && k.stddev1 == k.stddev2;
        } else {
          return true;
        }
      },
      kind_);
}

double InitialLaw::evolved_density(double t, double x) const {
  return std::visit(
      [t, x](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return gaussian_density(k.mean, k.stddev * k.stddev + t, x);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          const double width = k.hi - k.lo;
          if (t <= 0.0) return (x >= k.lo && x <= k.hi) ? 1.0 / width : 0.0;
          const double s = std::sqrt(t);
          return (normal_cdf((x - k.lo) / s) - normal_cdf((x - k.hi) / s)) /
                 width;
        } else {
          return k.weight *
                     gaussian_density(k.mean1, k.stddev1 * k.stddev1 + t, x) +
                 (1.0 - k.weight) *
                     gaussian_density(k.mean2, k.stddev2 * k.stddev2 + t, x);
        }
      },
      kind_);
}

double InitialLaw::evolved_cdf(double t, double x) const {
  return std::visit(
      [t, x](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return gaussian_cdf(k.mean, k.stddev * k.stddev + t, x);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          const double width = k.hi - k.lo;
          if (t <= 0.0) return std::clamp((x - k.lo) / width, 0.0, 1.0);
          const double s = std::sqrt(t);
          return (integrated_normal_cdf(x - k.lo, s) -
                  integrated_normal_cdf(x - k.hi, s)) /
                 width;
        } else {
          return k.weight * gaussian_cdf(k.mean1, k.stddev1 * k.stddev1 + t, x) +
                 (1.0 - k.weight) *
                     gaussian_cdf(k.mean2, k.stddev2 * k.stddev2 + t, x);
        }
      },
      kind_);
}

double InitialLaw::sample(const CounterRng& rng, std::uint64_t particle) const {
  return std::visit(
      [&rng, particle](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return k.mean + k.stddev * rng.normal(particle, 0);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return k.lo + (k.hi - k.lo) * rng.uniform(particle, 0);
        } else {
          const double z = rng.normal(particle, 0);
          return rng.uniform(particle, 1) < k.weight ? k.mean1 + k.stddev1 * z
                                                     : k.mean2 + k.stddev2 * z;
        }
      },
      kind_);
}

// ---------------------------------------------------------------------------

PathEnsemble::PathEnsemble(std::size_t n_particles, TimeGrid grid,
                           std::uint64_t seed)
    : n_particles_(n_particles), grid_(grid), seed_(seed) {
  if (n_particles < 1) throw ConfigError("PathEnsemble: need N >= 1");
  grid_.validate();
  positions_.assign(n_particles_ * n_times(), 0.0);
  increments_.assign(n_particles_ * grid_.n_steps, 0.0);
}

std::vector<double> PathEnsemble::marginal(std::size_t k) const {
  if (k >= filled_rows_) throw StateError("PathEnsemble: row not filled");
  std::vector<double> out(n_particles_);
  for (std::size_t i = 0; i < n_particles_; ++i) out[i] = position(i, k);
  return out;
}

void PathEnsemble::set_initial(std::span<const double> x0) {
  if (filled_rows_ != 0) throw StateError("PathEnsemble: already initialised");
  if (x0.size() != n_particles_) {
    throw ConfigError("PathEnsemble: initial positions size mismatch");
  }
  for (std::size_t i = 0; i < n_particles_; ++i) {
    if (!std::isfinite(x0[i])) throw DomainError("non-finite initial position");
    positions_[i * n_times()] = x0[i];
  }
  filled_rows_ = 1;
}

void PathEnsemble::push_row(std::span<const double> next,
                            std::span<const double> dw) {
  if (filled_rows_ == 0 || complete()) {
    throw StateError("PathEnsemble: no row to append");
  }
  if (next.size() != n_particles_ || dw.size() != n_particles_) {
    throw ConfigError("PathEnsemble: row size mismatch");
  }
  const std::size_t k = filled_rows_;
  for (std::size_t i = 0; i < n_particles_; ++i) {
    if (!std::isfinite(next[i])) {
      throw NumericalInstability("non-finite position produced at step " +
                                 std::to_string(k));
    }
    positions_[i * n_times() + k] = next[i];
    increments_[i * grid_.n_steps + (k - 1)] = dw[i];
  }
  filled_rows_ = k + 1;
}

void PathEnsemble::load(std::vector<double> positions,
                        std::vector<double> increments) {
  if (positions.size() != positions_.size()) {
    throw ConfigError("PathEnsemble: position block size mismatch");
  }
  if (!increments.empty() && increments.size() != increments_.size()) {
    throw ConfigError("PathEnsemble: increment block size mismatch");
  }
  positions_ = std::move(positions);
  has_increments_ = !increments.empty();
  if (has_increments_) increments_ = std::move(increments);
  else std::fill(increments_.begin(), increments_.end(), 0.0);
  filled_rows_ = n_times();
}

// ---------------------------------------------------------------------------

HistorySum::HistorySum(const TimeGrid& grid, std::size_t k,
                       const KernelParams& params, const DriftOptions& options)
    : k_(k), params_(params), tail_cutoff_(options.tail_cutoff) {
  inv_near_.resize(k);
  inv_far_.resize(k);
  near_.resize(k);
  far_.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    near_[m] = static_cast<double>(k - m - 1) * grid.dt;
    far_[m] = static_cast<double>(k - m) * grid.dt;
    inv_near_[m] = inv_sqrt_twice(near_[m]);
    inv_far_[m] = inv_sqrt_twice(far_[m]);
  }
}

double HistorySum::slab(std::size_t m, double x) const {
  if (params_.lambda > 0.0) {
    return kernel_time_integral(x, near_[m], far_[m], params_);
  }
  return erf_slab(x, inv_far_[m], inv_near_[m]);
}

double HistorySum::operator()(double x_now, std::span<const double> history,
                              DriftStats* stats) const {
  double total = 0.0;
  std::uint64_t calls = 0;
  std::uint64_t skipped = 0;
  const bool exact_lambda0 = params_.lambda == 0.0;
  for (std::size_t m = 0; m < k_; ++m) {
    const double x = x_now - history[m];
    if (tail_cutoff_ && std::fabs(x) * inv_far_[m] >= kTailCutoff) {
      ++skipped;
      continue;
    }
    ++calls;
    total += exact_lambda0 ? erf_slab(x, inv_far_[m], inv_near_[m])
                           : kernel_time_integral(x, near_[m], far_[m], params_);
  }
  if (stats) {
    stats->kernel_calls += calls;
    stats->skipped_slabs += skipped;
  }
  return total;
}

double interaction_drift(const PathEnsemble& ensemble, const HistorySum& sum,
                         std::size_t i, std::size_t source_begin,
                         std::size_t source_end, DriftStats* stats) {
  const std::size_t k = sum.step();
  const double x_now = ensemble.position(i, k);
  double total = 0.0;
  for (std::size_t j = source_begin; j < source_end; ++j) {
    if (j == i) continue;
    if (ensemble.position(j, k) == x_now) continue;
    total += sum(x_now, ensemble.path(j), stats);
  }
  return total;
}

double drift_eval(std::size_t i, std::size_t k, const PathEnsemble& ensemble,
                  const KernelParams& params, const DriftOptions& options) {
  if (i >= ensemble.n_particles()) throw DomainError("drift_eval: bad index");
  if (k >= ensemble.filled_rows()) {
    throw StateError("drift_eval: step exceeds filled history");
  }
  const HistorySum sum(ensemble.grid(), k, params, options);
  const double n = static_cast<double>(ensemble.n_particles());
  return params.chi / n *
         interaction_drift(ensemble, sum, i, 0, ensemble.n_particles());
}

NoiseSource counter_noise(std::uint64_t seed) {
  const CounterRng rng(seed, StreamDomain::brownian_increments);
  return [rng](std::size_t particle, std::size_t step) {
    return rng.normal(particle, step);
  };
}

DriftStats step(PathEnsemble& ensemble, std::size_t k, const KernelParams& params,
                const NoiseSource& noise, const DriftLayout& layout,
                const DriftOptions& options) {
  if (k + 1 != ensemble.filled_rows()) {
    throw StateError("step: rows 0..k must be exactly the filled history");
  }
  const std::size_t n = ensemble.n_particles();
  const std::size_t r = layout.driftless_count;
  if (r >= n && r != 0) throw DomainError("step: driftless count must be < N");
  const double dt = ensemble.grid().dt;
  const double sqrt_dt = std::sqrt(dt);
  const double scale = params.chi / static_cast<double>(n);
  const bool coupled = params.chi != 0.0 && k > 0;

  std::vector<double> drift(n, 0.0);
  std::uint64_t calls = 0;
  std::uint64_t skipped = 0;
  if (coupled) {
    const HistorySum sum(ensemble.grid(), k, params, options);
    const auto first = static_cast<std::ptrdiff_t>(r);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : calls, skipped)
    for (std::ptrdiff_t i = first; i < count; ++i) {
      DriftStats local;
      drift[static_cast<std::size_t>(i)] =
          scale * interaction_drift(ensemble, sum, static_cast<std::size_t>(i),
                                    r, n, &local);
      calls += local.kernel_calls;
      skipped += local.skipped_slabs;
    }
  }

  std::vector<double> next(n);
  std::vector<double> dw(n);
  for (std::size_t i = 0; i < n; ++i) {
    dw[i] = sqrt_dt * noise(i, k);
    next[i] = ensemble.position(i, k) + drift[i] * dt + dw[i];
  }
  ensemble.push_row(next, dw);
  return DriftStats{calls, skipped};
}

std::vector<double> draw_initial(std::size_t n_particles,
                                 const InitialLaw& initial, std::uint64_t seed) {
  const CounterRng rng(seed, StreamDomain::initial_positions);
  std::vector<double> x0(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) x0[i] = initial.sample(rng, i);
  return x0;
}

SimulationResult simulate_from(std::span<const double> x0, const TimeGrid& grid,
                               const KernelParams& params,
                               const NoiseSource& noise,
                               const DriftLayout& layout,
                               const DriftOptions& options,
                               std::uint64_t seed_record) {
  params.validate(/*allow_zero_coupling=*/true);
  if (layout.driftless_count != 0 && layout.driftless_count >= x0.size()) {
    throw DomainError("simulate: driftless count r must satisfy 1 <= r < N");
  }
  SimulationResult result{PathEnsemble(x0.size(), grid, seed_record), {}};
  result.ensemble.set_initial(x0);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    result.stats += step(result.ensemble, k, params, noise, layout, options);
  }
  return result;
}

PathEnsemble simulate(std::size_t n_particles, const TimeGrid& grid,
                      const InitialLaw& initial, const KernelParams& params,
                      std::uint64_t seed, const DriftOptions& options,
                      DriftStats* stats) {
  grid.validate();
  if (n_particles < 1) throw ConfigError("simulate: need N >= 1");
  const auto x0 = draw_initial(n_particles, initial, seed);
  auto result =
      simulate_from(x0, grid, params, counter_noise(seed), {}, options, seed);
  if (stats) *stats = result.stats;
  return std::move(result.ensemble);
}

PathEnsemble simulate_partial_driftless(std::size_t r, std::size_t n_particles,
                                        const TimeGrid& grid,
                                        const InitialLaw& initial,
                                        const KernelParams& params,
                                        std::uint64_t seed,
                                        const DriftOptions& options) {
  if (r < 1 || r >= n_particles) {
    throw DomainError("simulate_partial_driftless: need 1 <= r < N");
  }
  grid.validate();
  const auto x0 = draw_initial(n_particles, initial, seed);
  auto result = simulate_from(x0, grid, params, counter_noise(seed),
                              DriftLayout{r}, options, seed);
  return std::move(result.ensemble);
}

PathEnsemble brownian_reference(std::size_t n_particles, const TimeGrid& grid,
                                const InitialLaw& initial, std::uint64_t seed) {
  grid.validate();
  const auto x0 = draw_initial(n_particles, initial, seed);
  const CounterRng rng(seed, StreamDomain::brownian_increments);
  const double sqrt_dt = std::sqrt(grid.dt);
  std::vector<double> positions(n_particles * (grid.n_steps + 1));
  std::vector<double> increments(n_particles * grid.n_steps);
  for (std::size_t i = 0; i < n_particles; ++i) {
    double* row = positions.data() + i * (grid.n_steps + 1);
    row[0] = x0[i];
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      const double dw = sqrt_dt * rng.normal(i, k);
      increments[i * grid.n_steps + k] = dw;
      row[k + 1] = row[k] + dw;
    }
  }
  PathEnsemble out(n_particles, grid, seed);
  out.load(std::move(positions), std::move(increments));
  return out;
}

SelfConvergence self_convergence(std::size_t n_particles, const TimeGrid& coarse,
                                 const InitialLaw& initial,
                                 const KernelParams& params, std::uint64_t seed,
                                 const DriftOptions& options) {
  coarse.validate();
  const TimeGrid fine{coarse.dt / 2.0, coarse.n_steps * 2};
  const auto x0 = draw_initial(n_particles, initial, seed);
  const NoiseSource fine_noise = counter_noise(seed);
  const NoiseSource coarse_noise = [fine_noise](std::size_t i, std::size_t k) {
    return (fine_noise(i, 2 * k) + fine_noise(i, 2 * k + 1)) /
           std::numbers::sqrt2;
  };
  const auto a = simulate_from(x0, coarse, params, coarse_noise, {}, options);
  const auto b = simulate_from(x0, fine, params, fine_noise, {}, options);
  SelfConvergence out;
  out.dt_coarse = coarse.dt;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_particles; ++i) {
    const double gap = std::fabs(a.ensemble.position(i, coarse.n_steps) -
                                 b.ensemble.position(i, fine.n_steps));
    sum_sq += gap * gap;
    out.max_final_gap = std::max(out.max_final_gap, gap);
  }
  out.rms_final_gap = std::sqrt(sum_sq / static_cast<double>(n_particles));
  return out;
}

}  // namespace chemo
