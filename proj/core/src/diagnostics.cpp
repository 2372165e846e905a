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

#include "chemo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chemo/error.hpp"
#include "chemo/rng.hpp"
#include "chemo/stochastic.hpp"
#include "chemo/text_io.hpp"

namespace chemo {
namespace {

std::vector<double> sorted_finite(std::span<const double> values, const char* what) {
  if (values.empty()) throw DomainError(std::string(what) + ": empty sample");
  std::vector<double> out(values.begin(), values.end());
  for (double v : out) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite sample");
  }
  std::sort(out.begin(), out.end());
  return out;
}

// int_p^q |d(x)| dx for d linear from dp to dq.
double abs_linear_integral(double dp, double dq, double width) {
  if ((dp >= 0.0) == (dq >= 0.0) || dp == 0.0 || dq == 0.0) {
    return 0.5 * (std::fabs(dp) + std::fabs(dq)) * width;
  }
  return 0.5 * (dp * dp + dq * dq) / (std::fabs(dp) + std::fabs(dq)) * width;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::size_t time_index(double t, const TimeGrid& grid) {
  const double pos = t / grid.dt;
  const double k = std::round(pos);
  if (!(t > 0.0) || std::fabs(pos - k) > 1e-9 * std::max(1.0, pos) ||
      k > static_cast<double>(grid.n_steps)) {
    throw DomainError("time " + format_double(t) + " is not a grid time in (0, T]");
  }
  return static_cast<std::size_t>(k);
}

}  // namespace

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  const auto x = sorted_finite(a, "wasserstein1_1d");
  const auto y = sorted_finite(b, "wasserstein1_1d");
  if (x.size() == y.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += std::fabs(x[i] - y[i]);
    return total / static_cast<double>(x.size());
  }
  // Sweep the merged support; both CDFs are constant between breakpoints.
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  double prev = std::min(x.front(), y.front());
  while (i < x.size() || j < y.size()) {
    const double next = (j == y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    total += std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb) *
             (next - prev);
    while (i < x.size() && x[i] == next) ++i;
    while (j < y.size() && y[j] == next) ++j;
    prev = next;
  }
  return total;
}

double wasserstein1_1d(std::span<const double> samples, const DensityGrid& reference) {
  const auto s = sorted_finite(samples, "wasserstein1_1d");
  const auto cdf = reference.edge_cdf();
  const double mass = cdf.back();
  if (!(std::fabs(mass - 1.0) <= 1e-6)) {
    throw DomainError("wasserstein1_1d: reference density is not normalised");
  }
  const double n = static_cast<double>(s.size());
  const double h = reference.grid.h();
  const double x_min = reference.grid.x_min;
  const std::size_t cells = reference.grid.n_cells;
  auto edge = [&](std::size_t e) { return x_min + static_cast<double>(e) * h; };
  auto ref_cdf = [&](double x) {
    if (x <= x_min) return 0.0;
    const double pos = (x - x_min) / h;
    if (pos >= static_cast<double>(cells)) return 1.0;
    const auto c = std::min(static_cast<std::size_t>(pos), cells - 1);
    const double w = pos - static_cast<double>(c);
    return ((1.0 - w) * cdf[c] + w * cdf[c + 1]) / mass;
  };

  // Breakpoints: samples and cell edges, merged in order.
  std::size_t i = 0;  // samples consumed (count <= x)
  std::size_t e = 0;  // next edge
  double prev = std::min(s.front(), x_min);
  double total = 0.0;
  const double end = std::max(s.back(), edge(cells));
  while (prev < end) {
    while (i < s.size() && s[i] <= prev) ++i;
    while (e <= cells && edge(e) <= prev) ++e;
    double next = end;
    if (i < s.size()) next = std::min(next, s[i]);
    if (e <= cells) next = std::min(next, edge(e));
    const double fn = static_cast<double>(i) / n;
    total += abs_linear_integral(fn - ref_cdf(prev), fn - ref_cdf(next), next - prev);
    prev = next;
  }
  return total;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw DomainError("silverman_bandwidth: need two or more samples");
  const auto s = sorted_finite(samples, "silverman_bandwidth");
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) throw DomainError("silverman_bandwidth: samples have no spread");
  return 0.9 * spread * std::pow(n, -0.2);
}

DensityGrid density_estimate(std::span<const double> samples, const SpatialGrid& grid,
                             double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw DomainError("density_estimate: bandwidth must be positive");
  }
  grid.validate();
  if (samples.empty()) throw DomainError("density_estimate: empty sample");
  const double h = grid.h();
  const std::size_t cells = grid.n_cells;
  std::vector<double> mass(cells, 0.0);
  std::vector<double> edge_cdf;
  const double reach = 10.0 * bandwidth;
  for (double x : samples) {
    if (!std::isfinite(x)) throw DomainError("density_estimate: non-finite sample");
    const double lo = std::floor((x - reach - grid.x_min) / h);
    const double hi = std::ceil((x + reach - grid.x_min) / h);
    if (hi < 0.0 || lo > static_cast<double>(cells)) continue;
    const auto first = static_cast<std::size_t>(std::max(lo, 0.0));
    const auto last = static_cast<std::size_t>(std::min(hi, static_cast<double>(cells)));
    edge_cdf.resize(last - first + 1);
    for (std::size_t e = first; e <= last; ++e) {
      edge_cdf[e - first] =
          normal_cdf((grid.x_min + static_cast<double>(e) * h - x) / bandwidth);
    }
    for (std::size_t c = first; c < last; ++c) {
      mass[c] += edge_cdf[c + 1 - first] - edge_cdf[c - first];
    }
  }
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) throw DomainError("density_estimate: no sample mass on the grid");
  DensityGrid out{grid, std::vector<double>(cells)};
  for (std::size_t c = 0; c < cells; ++c) out.values[c] = mass[c] / (total * h);
  return out;
}

DensityGrid heat_reference(const InitialLaw& initial, const SpatialGrid& grid, double t) {
  grid.validate();
  if (t < 0.0) throw DomainError("heat_reference: t must be >= 0");
  const double h = grid.h();
  DensityGrid out{grid, std::vector<double>(grid.n_cells)};
  double prev = initial.evolved_cdf(t, grid.x_min);
  double total = 0.0;
  for (std::size_t c = 0; c < grid.n_cells; ++c) {
    const double next = initial.evolved_cdf(t, grid.x_min + static_cast<double>(c + 1) * h);
    out.values[c] = next - prev;
    total += next - prev;
    prev = next;
  }
  for (double& v : out.values) v /= total * h;
  return out;
}

std::vector<DecayPoint> l2_decay_series(const std::vector<PdeState>& snapshots,
                                        std::span<const double> times) {
  std::vector<DecayPoint> out;
  for (double t : times) {
    if (!(t > 0.0)) throw DomainError("l2_decay_series: times must be positive");
    const auto it = std::find_if(snapshots.begin(), snapshots.end(), [&](const PdeState& s) {
      return std::fabs(s.time - t) <= 1e-9 * std::max(1.0, t);
    });
    if (it == snapshots.end()) {
      throw DomainError("l2_decay_series: no snapshot at t = " + format_double(t));
    }
    DecayPoint p;
    p.t = t;
    p.value = p.alt_value = std::pow(t, 0.25) * it->rho.l2_norm();
    out.push_back(p);
  }
  return out;
}

std::vector<DecayPoint> l2_decay_series(const PathEnsemble& ensemble,
                                        std::span<const double> times,
                                        const SpatialGrid& grid,
                                        std::optional<double> bandwidth) {
  std::vector<DecayPoint> out;
  for (double t : times) {
    const std::size_t k = time_index(t, ensemble.grid());
    if (k >= ensemble.filled_rows()) throw StateError("l2_decay_series: time not simulated");
    const auto marginal = ensemble.marginal(k);
    DecayPoint p;
    p.t = t;
    p.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(marginal);
    p.alt_bandwidth = 2.0 * p.bandwidth;
    const double scale = std::pow(t, 0.25);
    p.value = scale * density_estimate(marginal, grid, p.bandwidth).l2_norm();
    p.alt_value = scale * density_estimate(marginal, grid, p.alt_bandwidth).l2_norm();
    out.push_back(p);
  }
  return out;
}

void ChaosConfig::validate() const {
  grid.validate();
  params.validate(/*allow_zero_coupling=*/true);
  kde_grid.validate();
  if (n_values.empty() || times.empty()) {
    throw ConfigError("chaos: need at least one N and one time");
  }
  for (std::size_t n : n_values) {
    if (n < 2) throw ConfigError("chaos: every N must be >= 2");
  }
  if (replicas < 2) throw ConfigError("chaos: need at least two replicas for a standard error");
  for (double t : times) time_index(t, grid);
}

std::uint64_t chaos_replica_seed(std::uint64_t seed, std::size_t n, std::size_t q) {
  return derive_seed(derive_seed(seed, n), q);
}

ChaosReport chaos_study(const ChaosConfig& config, std::uint64_t seed,
                        const std::vector<DensityGrid>& reference,
                        const ChaosCache& cache) {
  config.validate();
  if (reference.size() != config.times.size()) {
    throw ConfigError("chaos: one reference density per time is required");
  }
  ChaosReport report;
  report.n_values = config.n_values;
  report.times = config.times;
  std::vector<std::size_t> steps;
  for (double t : config.times) steps.push_back(time_index(t, config.grid));

  for (std::size_t n : config.n_values) {
    for (std::size_t q = 0; q < config.replicas; ++q) {
      std::optional<ChaosReplica> stored;
      if (cache.load) stored = cache.load(n, q);
      if (stored) {
        if (stored->w1.size() != config.times.size() ||
            stored->l2_decay.size() != config.times.size()) {
          throw ConfigError("chaos: stored replica does not match the configured times");
        }
        report.replicas.push_back(std::move(*stored));
        continue;
      }
      ChaosReplica r;
      r.n = n;
      r.replica = q;
      r.seed = chaos_replica_seed(seed, n, q);
      DriftStats stats;
      const auto ensemble = simulate(n, config.grid, config.initial, config.params,
                                     r.seed, config.options, &stats);
      r.kernel_calls = stats.kernel_calls;
      for (double x : ensemble.positions()) {
        r.max_abs_position = std::max(r.max_abs_position, std::fabs(x));
      }
      for (std::size_t j = 0; j < steps.size(); ++j) {
        r.w1.push_back(wasserstein1_1d(ensemble.marginal(steps[j]), reference[j]));
      }
      r.l2_decay = l2_decay_series(ensemble, config.times, config.kde_grid);
      if (cache.store) cache.store(r);
      report.replicas.push_back(std::move(r));
    }
  }

  const std::size_t nt = config.times.size();
  std::vector<double> log_n;
  for (std::size_t a = 0; a < config.n_values.size(); ++a) {
    std::vector<double> mean(nt), se(nt);
    for (std::size_t j = 0; j < nt; ++j) {
      std::vector<double> values;
      for (std::size_t q = 0; q < config.replicas; ++q) {
        values.push_back(report.replicas[a * config.replicas + q].w1[j]);
      }
      const McMean m = summarize_mean(values);
      mean[j] = m.estimate;
      se[j] = m.std_error;
    }
    report.w1_mean.push_back(mean);
    report.w1_se.push_back(se);
    log_n.push_back(std::log(static_cast<double>(config.n_values[a])));
  }
  for (const auto& r : report.replicas) {
    report.max_abs_position = std::max(report.max_abs_position, r.max_abs_position);
  }
  const std::size_t largest = static_cast<std::size_t>(
      std::max_element(config.n_values.begin(), config.n_values.end()) -
      config.n_values.begin());
  report.l2_decay = report.replicas[largest * config.replicas].l2_decay;
  for (std::size_t j = 0; j < nt; ++j) {
    if (config.n_values.size() < 2) break;
    std::vector<double> log_w;
    for (std::size_t a = 0; a < config.n_values.size(); ++a) {
      log_w.push_back(std::log(report.w1_mean[a][j]));
    }
    report.fit_slope.push_back(least_squares(log_n, log_w).slope);
  }
  return report;
}

std::string chaos_summary_csv(const ChaosReport& report) {
  CsvTable table({"n", "t", "replicas", "w1_mean", "w1_se", "fit_slope"});
  const std::size_t replicas =
      report.n_values.empty() ? 0 : report.replicas.size() / report.n_values.size();
  for (std::size_t a = 0; a < report.n_values.size(); ++a) {
    for (std::size_t j = 0; j < report.times.size(); ++j) {
      table.add_row({std::to_string(report.n_values[a]), format_double(report.times[j]),
                     std::to_string(replicas), format_double(report.w1_mean[a][j]),
                     format_double(report.w1_se[a][j]),
                     j < report.fit_slope.size() ? format_double(report.fit_slope[j]) : ""});
    }
  }
  return table.str();
}

std::string chaos_replicas_csv(const ChaosReport& report) {
  CsvTable table({"n", "replica", "seed", "t", "w1", "l2_decay", "l2_decay_alt",
                  "bandwidth", "max_abs_position", "kernel_calls"});
  for (const auto& r : report.replicas) {
    for (std::size_t j = 0; j < r.w1.size(); ++j) {
      table.add_row({std::to_string(r.n), std::to_string(r.replica), std::to_string(r.seed),
                     format_double(report.times[j]), format_double(r.w1[j]),
                     format_double(r.l2_decay[j].value), format_double(r.l2_decay[j].alt_value),
                     format_double(r.l2_decay[j].bandwidth),
                     format_double(r.max_abs_position), std::to_string(r.kernel_calls)});
    }
  }
  return table.str();
}

}  // namespace chemo
