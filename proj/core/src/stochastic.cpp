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

#include "chemo/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chemo/error.hpp"
#include "chemo/rng.hpp"

namespace chemo {
namespace {

std::size_t grid_index(double t, const TimeGrid& grid, const char* what) {
  const double pos = t / grid.dt;
  const double k = std::round(pos);
  if (!(t >= 0.0) || std::fabs(pos - k) > 1e-9 * std::max(1.0, pos) ||
      k > static_cast<double>(grid.n_steps)) {
    throw ConfigError(std::string(what) + " must be a grid time in [0, T]");
  }
  return static_cast<std::size_t>(k);
}

// Brownian path on the grid, constant before `start_step`, keyed by
// (rng, sample).
void brownian_path(std::vector<double>& out, const CounterRng& rng,
                   std::size_t sample, std::size_t start_step, double start,
                   double sqrt_dt) {
  for (std::size_t k = 0; k <= start_step; ++k) out[k] = start;
  for (std::size_t k = start_step; k + 1 < out.size(); ++k) {
    out[k + 1] = out[k] + sqrt_dt * rng.normal(sample, k);
  }
}

void check_samples(std::size_t n) {
  if (n < kMinMcSamples) {
    throw ConfigError("Monte Carlo needs at least 100 samples for a standard error");
  }
}

}  // namespace

void PathPair::validate() const {
  grid.validate();
  if (x.size() != grid.n_steps + 1 || x_hat.size() != grid.n_steps + 1) {
    throw ConfigError("PathPair: paths must have n_steps + 1 entries");
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(x_hat[k])) {
      throw DomainError("PathPair: non-finite entry");
    }
  }
}

double functional_F(const PathPair& pair, std::size_t k, const KernelParams& params) {
  pair.validate();
  if (k < 1 || k > pair.grid.n_steps) throw DomainError("functional_F: need 1 <= k <= n");
  if (pair.x[k] == pair.x_hat[k]) return 0.0;
  const HistorySum sum(pair.grid, k, params);
  const double s = sum(pair.x[k], pair.x_hat);
  return s * s;
}

double functional_F_integral(std::span<const double> x, std::span<const double> x_hat,
                             const TimeGrid& grid, std::size_t k1, std::size_t k2,
                             const KernelParams& params) {
  double total = 0.0;
  for (std::size_t k = k1 + 1; k <= k2; ++k) {
    if (x[k] == x_hat[k]) continue;
    const HistorySum sum(grid, k, params);
    const double s = sum(x[k], x_hat);
    total += s * s;
  }
  return total * grid.dt;
}

McMean summarize_mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize_mean: no samples");
  McMean out;
  out.n_samples = values.size();
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.estimate = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.estimate) * (v - out.estimate);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

ExpMomentEstimate summarize_exponentials(std::span<const double> exponents) {
  if (exponents.empty()) throw DomainError("summarize_exponentials: no samples");
  ExpMomentEstimate out;
  out.n_samples = exponents.size();
  const double n = static_cast<double>(exponents.size());
  out.max_exponent = *std::max_element(exponents.begin(), exponents.end());
  if (!std::isfinite(out.max_exponent)) {
    out.unstable = true;
    out.estimate = out.log_estimate = out.max_exponent;
    out.std_error = std::numeric_limits<double>::infinity();
    out.max_weight_fraction = 1.0;
    return out;
  }
  double scaled_sum = 0.0;
  for (double e : exponents) scaled_sum += std::exp(e - out.max_exponent);
  const double scaled_mean = scaled_sum / n;
  double ss = 0.0;
  for (double e : exponents) {
    const double d = std::exp(e - out.max_exponent) - scaled_mean;
    ss += d * d;
  }
  const double scale = std::exp(out.max_exponent);
  out.log_estimate = out.max_exponent + std::log(scaled_mean);
  out.estimate = scale * scaled_mean;
  out.std_error = exponents.size() > 1 ? scale * std::sqrt(ss / (n - 1.0) / n) : 0.0;
  out.max_weight_fraction = 1.0 / scaled_sum;
  out.unstable = out.max_weight_fraction > kUnstableWeightFraction ||
                 !std::isfinite(out.estimate);
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DomainError("least_squares: need two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("least_squares: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

McMean lemma31_scaling_mc(const Lemma31Config& config,
                          std::span<const double> x_path, const TimeGrid& grid,
                          const KernelParams& params) {
  grid.validate();
  check_samples(config.n_samples);
  if (x_path.size() != grid.n_steps + 1) {
    throw ConfigError("lemma31_scaling_mc: x path does not match the grid");
  }
  if (!(config.t1 <= config.t2)) throw DomainError("lemma31_scaling_mc: need t1 <= t2");
  const std::size_t k1 = grid_index(config.t1, grid, "t1");
  const std::size_t k2 = grid_index(config.t2, grid, "t2");
  std::vector<double> values(config.n_samples, 0.0);
  if (k1 == k2) return summarize_mean(values);

  const CounterRng rng(config.seed, StreamDomain::reference_paths);
  const double sqrt_dt = std::sqrt(grid.dt);
  const auto count = static_cast<std::ptrdiff_t>(config.n_samples);
#pragma omp parallel
  {
    std::vector<double> w(k2 + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < count; ++s) {
      brownian_path(w, rng, static_cast<std::size_t>(s), k1, config.w_start, sqrt_dt);
      values[static_cast<std::size_t>(s)] =
          functional_F_integral(w, x_path, grid, k1, k2, params);
    }
  }
  return summarize_mean(values);
}

ScalingFit lemma31_scaling_study(std::span<const double> windows,
                                 const Lemma31Config& base,
                                 std::span<const double> x_path,
                                 const TimeGrid& grid, const KernelParams& params) {
  if (windows.size() < 2) throw ConfigError("scaling study needs two or more windows");
  ScalingFit fit;
  std::vector<double> lx, ly;
  for (double window : windows) {
    if (!(window > 0.0)) throw DomainError("scaling study: windows must be positive");
    Lemma31Config config = base;
    config.t2 = base.t1 + window;
    const McMean m = lemma31_scaling_mc(config, x_path, grid, params);
    if (!(m.estimate > 0.0)) {
      throw NumericalInstability("scaling study: zero estimate, log undefined");
    }
    fit.windows.push_back(window);
    fit.estimates.push_back(m);
    lx.push_back(std::log(window));
    ly.push_back(std::log(m.estimate));
  }
  const LinearFit line = least_squares(lx, ly);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

ExpMomentEstimate exp_moment_mc(const ExpMomentConfig& config,
                                const KernelParams& params) {
  config.grid.validate();
  check_samples(config.n_samples);
  if (!(config.alpha > 0.0)) throw DomainError("exp_moment_mc: alpha must be positive");
  if (config.scale_inv_n && *config.scale_inv_n == 0) {
    throw DomainError("exp_moment_mc: N must be positive");
  }
  const bool appendix = config.scale_inv_n.has_value();
  const double alpha =
      appendix ? config.alpha / static_cast<double>(*config.scale_inv_n) : config.alpha;
  const TimeGrid& grid = config.grid;
  const std::size_t n = grid.n_steps;
  const CounterRng w_rng(config.seed, StreamDomain::reference_paths);
  const CounterRng y_rng(config.seed, StreamDomain::history_paths);
  const double sqrt_dt = std::sqrt(grid.dt);

  std::vector<double> exponents(config.n_samples);
  const auto count = static_cast<std::ptrdiff_t>(config.n_samples);
#pragma omp parallel
  {
    std::vector<double> w(n + 1), y(n + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t si = 0; si < count; ++si) {
      const auto s = static_cast<std::size_t>(si);
      brownian_path(w, w_rng, s, 0, config.w_start, sqrt_dt);
      if (config.y_law.kind == YLaw::Kind::brownian) {
        brownian_path(y, y_rng, s, 0, config.y_law.value, sqrt_dt);
      } else {
        std::fill(y.begin(), y.end(), config.y_law.value);
      }
      const double integral = appendix
                                  ? functional_F_integral(y, w, grid, 0, n, params)
                                  : functional_F_integral(w, y, grid, 0, n, params);
      exponents[s] = alpha * integral;
    }
  }
  return summarize_exponentials(exponents);
}

void GirsanovAccumulator::add(double drift_dot_dw, double drift_sq_dt) noexcept {
  ito_term += r == 0 ? drift_dot_dw : -drift_dot_dw;
  quad_term += drift_sq_dt;
  log_weight = ito_term - 0.5 * quad_term;
}

std::vector<double> girsanov_drift(const PathEnsemble& ensemble, std::size_t r,
                                   std::size_t k, const KernelParams& params,
                                   const DriftOptions& options) {
  const std::size_t n = ensemble.n_particles();
  if (r >= n) throw DomainError("girsanov_drift: need 0 <= r < N");
  if (k >= ensemble.filled_rows()) {
    throw StateError("girsanov_drift: step exceeds filled history");
  }
  std::vector<double> beta(n, 0.0);
  if (k == 0 || params.chi == 0.0) return beta;
  const HistorySum sum(ensemble.grid(), k, params, options);
  const double scale = params.chi / static_cast<double>(n);
  const std::size_t full = r == 0 ? n : r;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t source_end = i < full ? n : r;
    beta[i] = scale * interaction_drift(ensemble, sum, i, 0, source_end);
  }
  return beta;
}

std::vector<GirsanovAccumulator> girsanov_accumulate(const PathEnsemble& ensemble,
                                                     std::size_t r,
                                                     const KernelParams& params,
                                                     const DriftOptions& options) {
  if (!ensemble.complete() || !ensemble.has_increments()) {
    throw StateError("girsanov_accumulate: need a complete ensemble with increments");
  }
  if (r >= ensemble.n_particles()) throw DomainError("girsanov_accumulate: need r < N");
  const TimeGrid& grid = ensemble.grid();
  std::vector<GirsanovAccumulator> out;
  out.reserve(grid.n_steps + 1);
  GirsanovAccumulator acc;
  acc.r = r;
  out.push_back(acc);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const auto beta = girsanov_drift(ensemble, r, k, params, options);
    double dot = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      dot += beta[i] * ensemble.increments(i)[k];
      sq += beta[i] * beta[i];
    }
    acc.add(dot, sq * grid.dt);
    out.push_back(acc);
  }
  return out;
}

ExpMomentEstimate girsanov_martingale_check(const GirsanovCheckConfig& config,
                                            const KernelParams& params) {
  check_samples(config.n_replicas);
  config.grid.validate();
  if (config.r >= config.n_particles) throw DomainError("girsanov check: need r < N");
  std::vector<double> log_z(config.n_replicas);
  const auto count = static_cast<std::ptrdiff_t>(config.n_replicas);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t q = 0; q < count; ++q) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(q));
    const PathEnsemble ensemble =
        config.r == 0
            ? brownian_reference(config.n_particles, config.grid, config.initial, seed)
            : simulate_partial_driftless(config.r, config.n_particles, config.grid,
                                         config.initial, params, seed);
    log_z[static_cast<std::size_t>(q)] =
        girsanov_accumulate(ensemble, config.r, params).back().log_weight;
  }
  return summarize_exponentials(log_z);
}

double novikov_exponent(const PathEnsemble& ensemble, double kappa,
                        const KernelParams& params, const DriftOptions& options) {
  if (!(kappa > 0.0)) throw DomainError("novikov: kappa must be positive");
  return kappa * girsanov_accumulate(ensemble, 0, params, options).back().quad_term;
}

ExpMomentEstimate novikov_probe(const NovikovConfig& config,
                                const KernelParams& params) {
  check_samples(config.n_replicas);
  config.grid.validate();
  if (!(config.kappa > 0.0)) throw DomainError("novikov: kappa must be positive");
  std::vector<double> exponents(config.n_replicas);
  const auto count = static_cast<std::ptrdiff_t>(config.n_replicas);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t q = 0; q < count; ++q) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(q));
    const auto ensemble =
        brownian_reference(config.n_particles, config.grid, config.initial, seed);
    exponents[static_cast<std::size_t>(q)] =
        novikov_exponent(ensemble, config.kappa, params);
  }
  return summarize_exponentials(exponents);
}

}  // namespace chemo
