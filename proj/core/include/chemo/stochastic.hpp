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
#include <optional>
#include <span>
#include <vector>

#include "chemo/kernel.hpp"
#include "chemo/particles.hpp"

namespace chemo {

// Two discretised paths on one grid: x is read at the current time, x_hat
// along the history.
struct PathPair {
  TimeGrid grid;
  std::vector<double> x;
  std::vector<double> x_hat;

  void validate() const;
};

// F_{t_k}(x, x_hat) = (sum_{m<k} slab_m(x_k - x_hat_m))^2 1{x_k != x_hat_k},
// the slab sum of drift_eval without chi and 1/N. Only params.lambda is used.
double functional_F(const PathPair& pair, std::size_t k, const KernelParams& params);

// Right-endpoint Riemann sum of F over (t_{k1}, t_{k2}]:
// dt * sum_{k=k1+1}^{k2} F_{t_k}(x, x_hat).
double functional_F_integral(std::span<const double> x, std::span<const double> x_hat,
                             const TimeGrid& grid, std::size_t k1, std::size_t k2,
                             const KernelParams& params);

// Plain Monte Carlo mean.
struct McMean {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};
McMean summarize_mean(std::span<const double> values);

// Monte Carlo mean of exp(E_s) from sampled exponents E_s, computed in the log
// domain. max_weight_fraction = max_s e^{E_s} / sum_s e^{E_s}; above 0.5 the
// estimate is one sample in disguise and is flagged unstable.
struct ExpMomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double log_estimate = 0.0;
  std::size_t n_samples = 0;
  double max_exponent = 0.0;
  double max_weight_fraction = 0.0;
  bool unstable = false;
};
inline constexpr double kUnstableWeightFraction = 0.5;
ExpMomentEstimate summarize_exponentials(std::span<const double> exponents);

// Lemma 3.1 probe: E int_{t1}^{t2} F_t(w, x) dt with w a Brownian motion
// restarted at t1 from w_start. Only w on [t1, t2] enters F (w is read at
// the current time, x along the history). t1 and t2 must lie on the grid.
struct Lemma31Config {
  double t1 = 0.0;
  double t2 = 0.0;
  double w_start = 0.0;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
};
inline constexpr std::size_t kMinMcSamples = 100;
McMean lemma31_scaling_mc(const Lemma31Config& config,
                          std::span<const double> x_path, const TimeGrid& grid,
                          const KernelParams& params = {});

// Window-length regression of the Lemma 3.1 estimate at fixed t1: slope of
// log estimate against log (t2 - t1). Every window reuses the same seed.
struct ScalingFit {
  std::vector<double> windows;
  std::vector<McMean> estimates;
  double slope = 0.0;
  double intercept = 0.0;
};
ScalingFit lemma31_scaling_study(std::span<const double> windows,
                                 const Lemma31Config& base,
                                 std::span<const double> x_path,
                                 const TimeGrid& grid,
                                 const KernelParams& params = {});

// Ordinary least squares of y on x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Law of the process Y, independent of w.
struct YLaw {
  enum class Kind { brownian, constant };
  Kind kind = Kind::brownian;
  double value = 0.0;  // start point (brownian) or the constant

  static YLaw brownian(double start = 0.0) { return {Kind::brownian, start}; }
  static YLaw constant(double c) { return {Kind::constant, c}; }
};

// E exp{alpha' int_0^T F dt}, w a Brownian motion from w_start.
// Without scale_inv_n: Prop. 3.3 form, alpha' = alpha, F_t(w, Y).
// With scale_inv_n = N: Appendix form, alpha' = alpha / N, roles exchanged
// (Y read at the current time, w along the history).
struct ExpMomentConfig {
  double alpha = 1.0;
  std::optional<std::size_t> scale_inv_n;
  TimeGrid grid;
  YLaw y_law;
  double w_start = 0.0;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
};
ExpMomentEstimate exp_moment_mc(const ExpMomentConfig& config,
                                const KernelParams& params = {});

// Running Girsanov log-weight. r >= 1: Z^(r) = exp{-sum beta.dW - 1/2 sum
// |beta|^2 dt}; r = 0: Z^N = exp{+sum B.dW - 1/2 sum |B|^2 dt}.
struct GirsanovAccumulator {
  std::size_t r = 0;
  double ito_term = 0.0;
  double quad_term = 0.0;
  double log_weight = 0.0;

  // Adds one left-endpoint step given drift.dW and |drift|^2 dt; the sign of
  // the Ito term follows r.
  void add(double drift_dot_dw, double drift_sq_dt) noexcept;
};

// beta^(r)_{t_k}: for i < r the full drift b^{i,N}; for i >= r the part
// (chi / N) sum_{j<r} of the drift felt from the driftless particles.
// r = 0 gives the full drift vector B^N.
std::vector<double> girsanov_drift(const PathEnsemble& ensemble, std::size_t r,
                                   std::size_t k, const KernelParams& params,
                                   const DriftOptions& options = {});

// Accumulator after each step 0..n (entry 0 is the zero state).
std::vector<GirsanovAccumulator> girsanov_accumulate(
    const PathEnsemble& ensemble, std::size_t r, const KernelParams& params,
    const DriftOptions& options = {});

// Mean of Z_T^(r) over independent ensembles (partial-driftless for r >= 1,
// Brownian for r = 0). Replica q uses seed derive_seed(seed, q).
struct GirsanovCheckConfig {
  std::size_t n_particles = 8;
  std::size_t r = 1;
  TimeGrid grid{1.0 / 256.0, 64};
  InitialLaw initial = InitialLaw::gaussian(0.0, 1.0);
  std::size_t n_replicas = 10000;
  std::uint64_t seed = 0;
};
ExpMomentEstimate girsanov_martingale_check(const GirsanovCheckConfig& config,
                                            const KernelParams& params);

// kappa int_0^T |B^N_t|^2 dt along one Brownian ensemble.
double novikov_exponent(const PathEnsemble& ensemble, double kappa,
                        const KernelParams& params,
                        const DriftOptions& options = {});

// E exp{kappa int_0^T |B^N_t|^2 dt} over Brownian ensembles.
struct NovikovConfig {
  std::size_t n_particles = 4;
  TimeGrid grid{1.0 / 256.0, 64};
  InitialLaw initial = InitialLaw::gaussian(0.0, 1.0);
  double kappa = 0.5;
  std::size_t n_replicas = 2000;
  std::uint64_t seed = 0;
};
ExpMomentEstimate novikov_probe(const NovikovConfig& config,
                                const KernelParams& params);

}  // namespace chemo
