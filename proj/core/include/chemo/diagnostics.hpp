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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemo/kernel.hpp"
#include "chemo/mean_field.hpp"
#include "chemo/particles.hpp"

namespace chemo {

// W1 between two empirical laws: int |F_a - F_b| dx (equals the sorted
// quantile coupling when the sizes match).
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

// W1 between an empirical law and a piecewise-constant density, computed
// exactly as int |F_n - F| dx with F piecewise linear between cell edges.
double wasserstein1_1d(std::span<const double> samples, const DensityGrid& reference);

// 0.9 min(sd, IQR / 1.34) n^{-1/5}.
double silverman_bandwidth(std::span<const double> samples);

// Gaussian KDE as exact cell averages (differences of the normal CDF at the
// cell edges), renormalised to unit mass on the grid.
DensityGrid density_estimate(std::span<const double> samples, const SpatialGrid& grid,
                             double bandwidth);

// Cell averages of the law X_0 + W_t, from the exact CDF.
DensityGrid heat_reference(const InitialLaw& initial, const SpatialGrid& grid, double t);

struct DecayPoint {
  double t = 0.0;
  double bandwidth = 0.0;  // 0 for a PDE snapshot
  double value = 0.0;      // t^{1/4} ||rho_t||_2
  // Same quantity at twice the bandwidth (KDE sensitivity); equals value for
  // PDE snapshots.
  double alt_bandwidth = 0.0;
  double alt_value = 0.0;
};

// t^{1/4} ||rho_t||_2 from PDE snapshots at the requested times.
std::vector<DecayPoint> l2_decay_series(const std::vector<PdeState>& snapshots,
                                        std::span<const double> times);

// Same from a particle ensemble through the KDE; bandwidth defaults to
// Silverman's rule per time.
std::vector<DecayPoint> l2_decay_series(const PathEnsemble& ensemble,
                                        std::span<const double> times,
                                        const SpatialGrid& grid,
                                        std::optional<double> bandwidth = std::nullopt);

struct ChaosConfig {
  std::vector<std::size_t> n_values{32, 128, 512};
  std::size_t replicas = 16;
  std::vector<double> times{0.5};  // must lie on the particle grid
  TimeGrid grid{5e-3, 100};
  InitialLaw initial = InitialLaw::gaussian(0.0, 1.0);
  KernelParams params{0.0, 1.0};
  DriftOptions options{};
  SpatialGrid kde_grid{};  // for the L2 decay diagnostic

  void validate() const;
};

// One replica's contribution.
struct ChaosReplica {
  std::size_t n = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::vector<double> w1;  // per time
  std::vector<DecayPoint> l2_decay;  // per time
  double max_abs_position = 0.0;
  std::uint64_t kernel_calls = 0;
};

struct ChaosReport {
  std::vector<std::size_t> n_values;
  std::vector<double> times;
  std::vector<std::vector<double>> w1_mean;  // [n index][time index]
  std::vector<std::vector<double>> w1_se;
  std::vector<ChaosReplica> replicas;        // ordered by (n, replica)
  std::vector<DecayPoint> l2_decay;          // largest N, replica 0
  std::vector<double> fit_slope;             // per time: d log W1 / d log N
  double max_abs_position = 0.0;
};

// Seed of replica q at ensemble size n.
std::uint64_t chaos_replica_seed(std::uint64_t seed, std::size_t n, std::size_t q);

// Hooks that let a caller resume a study from stored replicas.
struct ChaosCache {
  std::function<std::optional<ChaosReplica>(std::size_t n, std::size_t q)> load;
  std::function<void(const ChaosReplica&)> store;
};

// reference[j] is the limit density at config.times[j].
ChaosReport chaos_study(const ChaosConfig& config, std::uint64_t seed,
                        const std::vector<DensityGrid>& reference,
                        const ChaosCache& cache = {});

// Tabular forms: summary one row per (N, t); replicas one row per (N, q, t).
std::string chaos_summary_csv(const ChaosReport& report);
std::string chaos_replicas_csv(const ChaosReport& report);

}  // namespace chemo
