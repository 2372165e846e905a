#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "chemo/diagnostics.hpp"
#include "chemo/error.hpp"
#include "chemo/mean_field.hpp"
#include "doctest.h"

using namespace chemo;
using doctest::Approx;

namespace {

const KernelParams kHeat{0.0, 0.0};
const KernelParams kAttract{0.0, 1.0};

// Gaussian density series N(0, s0^2 + t_m), evaluated off any grid.
struct GaussianSeries {
  double s0;
  double var(double t) const { return s0 * s0 + t; }
  double density(double t, double y) const {
    const double v = var(t);
    return std::exp(-y * y / (2 * v)) / std::sqrt(2 * M_PI * v);
  }
};

DensitySeries sampled_series(const GaussianSeries& g, const SpatialGrid& grid,
                             const TimeGrid& times) {
  DensitySeries s{grid, times, {}};
  for (std::size_t m = 0; m <= times.n_steps; ++m) {
    std::vector<double> rho(grid.n_cells);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
      rho[i] = g.density(times.time(m), grid.center(i));
    }
    s.rho.push_back(std::move(rho));
  }
  return s;
}

}  // namespace

TEST_CASE("grid helpers") {
  SpatialGrid g{-1.0, 1.0, 20};
  CHECK(g.h() == Approx(0.1));
  CHECK(g.center(0) == Approx(-0.95));
  CHECK(g.center(19) == Approx(0.95));
  CHECK_THROWS_AS((SpatialGrid{1.0, -1.0, 20}.validate()), ConfigError);
  CHECK_THROWS_AS((SpatialGrid{-1.0, 1.0, 4}.validate()), ConfigError);

  DensityGrid d{g, std::vector<double>(20, 0.5)};
  CHECK(d.mass() == Approx(1.0));
  const auto cdf = d.edge_cdf();
  REQUIRE(cdf.size() == 21);
  CHECK(cdf.back() == Approx(1.0));
  CHECK(cdf[10] == Approx(0.5));
  CHECK(d.value_at(0.3) == Approx(0.5));
  CHECK(d.value_at(5.0) == 0.0);
  CHECK(d.max_abs_asymmetry() == 0.0);
}

TEST_CASE("chi = 0 reproduces the heat semigroup") {
  // rho_t = 1/2 rho_xx from N(0,1) is N(0, 1 + t).
  const SpatialGrid grid{-8.0, 8.0, 1600};
  const auto law = InitialLaw::gaussian(0.0, 1.0);
  const TimeGrid times{0.05, 4};
  const auto run = pde_solve(law, grid, times, 5e-5, kHeat);
  CHECK(run.substeps == 1000);
  double worst = 0.0;
  for (std::size_t k = 0; k <= times.n_steps; ++k) {
    const auto& rho = run.snapshots[k].rho;
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
      worst = std::max(worst, std::fabs(rho.values[i] -
                                        law.evolved_density(times.time(k),
                                                            grid.center(i))));
    }
  }
  CHECK(worst < 1e-4);
  CHECK(run.cumulative_mass_drift < 1e-12);
}

TEST_CASE("attractive run conserves mass, symmetry and sign") {
  const SpatialGrid grid{-8.0, 8.0, 800};
  const auto law = InitialLaw::gaussian(0.0, 1.0);
  const TimeGrid times{0.1, 5};
  const auto run = pde_solve(law, grid, times, 1e-4, kAttract);
  CHECK(run.cumulative_mass_drift < 1e-12);
  CHECK(run.max_step_mass_change < 1e-13);
  CHECK(run.min_density >= 0.0);
  CHECK(run.max_clipped_mass == 0.0);
  for (const auto& s : run.snapshots) {
    CHECK(s.rho.max_abs_asymmetry() < 1e-12);
    CHECK(s.rho.mass() == Approx(1.0).epsilon(1e-12));
  }
  // Attraction concentrates: the peak stays above the free heat peak.
  const auto free = pde_solve(law, grid, times, 1e-4, kHeat);
  CHECK(run.snapshots.back().rho.l2_norm() > free.snapshots.back().rho.l2_norm());
  // c solves the forced heat equation and is even.
  const auto& c = run.snapshots.back().c;
  CHECK(*std::min_element(c.begin(), c.end()) >= 0.0);
  CHECK(std::fabs(c[0] - c[c.size() - 1]) < 1e-12);
}

TEST_CASE("spatial self-convergence h vs h/2") {
  const auto law = InitialLaw::two_bump(0.5, -1.0, 0.6, 1.0, 0.6);
  const TimeGrid times{0.25, 2};
  const SpatialGrid coarse{-8.0, 8.0, 400};
  const SpatialGrid fine{-8.0, 8.0, 800};
  const auto a = pde_solve(law, coarse, times, 2.5e-5, kAttract);
  const auto b = pde_solve(law, fine, times, 2.5e-5, kAttract);
  DensityGrid pooled{coarse, std::vector<double>(coarse.n_cells)};
  const auto& fine_rho = b.snapshots.back().rho.values;
  for (std::size_t i = 0; i < coarse.n_cells; ++i) {
    pooled.values[i] = 0.5 * (fine_rho[2 * i] + fine_rho[2 * i + 1]);
  }
  CHECK(a.snapshots.back().rho.l1_distance(pooled) < 1e-3);
}

TEST_CASE("pde guards") {
  const auto law = InitialLaw::gaussian(0.0, 1.0);
  // Domain too narrow for the initial law.
  CHECK_THROWS_AS(pde_initial_state(law, SpatialGrid{-3.0, 3.0, 300}), ConfigError);
  const auto state = pde_initial_state(law, SpatialGrid{-8.0, 8.0, 160});
  CHECK(state.rho.mass() == Approx(1.0).epsilon(1e-14));
  // dt above h^2.
  CHECK_THROWS_AS(pde_step(state, 0.02, kAttract), ConfigError);
  CHECK_NOTHROW(pde_step(state, 0.01, kAttract));
  // Spreading reaches the boundary of a tight (but initially valid) domain.
  CHECK_THROWS_AS(pde_solve(law, SpatialGrid{-7.0, 7.0, 140}, TimeGrid{1.0, 8},
                            0.01, kHeat),
                  NumericalInstability);
}

TEST_CASE("snapshot files round-trip") {
  const auto law = InitialLaw::gaussian(0.0, 1.0);
  const auto run = pde_solve(law, SpatialGrid{-8.0, 8.0, 64}, TimeGrid{0.05, 3},
                             0.05, kAttract);
  const auto dir = std::filesystem::temp_directory_path() / "chemo_mf_io";
  std::filesystem::create_directories(dir);
  write_snapshots_binary(dir / "s.bin", run.snapshots);
  const auto back = read_snapshots_binary(dir / "s.bin");
  REQUIRE(back.size() == run.snapshots.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].time == run.snapshots[k].time);
    CHECK(back[k].rho.values == run.snapshots[k].rho.values);
    CHECK(back[k].c == run.snapshots[k].c);
  }
  CHECK(std::filesystem::file_size(dir / "s.bin") ==
        32 + 4 * (8 + 2 * 64 * 8));
  write_snapshots_csv(dir / "s.csv", run.snapshots);
  CHECK(std::filesystem::file_size(dir / "s.csv") > 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("nonlinear drift: direct sum vs independent quadrature") {
  const GaussianSeries g{0.8};
  const SpatialGrid grid{-10.0, 10.0, 4000};
  const TimeGrid times{0.05, 6};
  const auto series = sampled_series(g, grid, times);
  const std::size_t k = times.n_steps;
  for (double x : {-1.3, -0.2, 0.0, 0.45, 2.0}) {
    double oracle = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double a = times.time(k - m - 1);
      const double b = times.time(k - m);
      auto f = [&](double y) {
        return g.density(times.time(m), y) * kernel_time_integral(x - y, a, b, kAttract);
      };
      // split at the kernel kink y = x
      oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    f, -12.0, x, 15, 1e-13) +
                boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    f, x, 12.0, 15, 1e-13);
    }
    CHECK(std::fabs(nl_drift_from_density(series, k, x, kAttract) - oracle) < 2e-5);
  }
  // Pulls toward the bulk: negative to the right of 0, odd in x.
  CHECK(nl_drift_from_density(series, k, 1.0, kAttract) < 0.0);
  CHECK(nl_drift_from_density(series, k, 0.7, kAttract) ==
        Approx(-nl_drift_from_density(series, k, -0.7, kAttract)).epsilon(1e-12));
  CHECK(nl_drift_from_density(series, 0, 0.3, kAttract) == 0.0);
}

TEST_CASE("FFT drift matches direct summation") {
  const GaussianSeries g{0.5};
  const SpatialGrid grid{-6.0, 6.0, 300};
  const TimeGrid times{0.02, 12};
  const auto series = sampled_series(g, grid, times);
  for (const KernelParams& p : {kAttract, KernelParams{0.7, 1.0}}) {
    const MeanFieldDrift drift(series, p);
    REQUIRE(drift.n_steps() == times.n_steps + 1);
    double worst = 0.0;
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, times.n_steps}) {
      const auto field = drift.field(k);
      for (std::size_t i = 0; i < grid.n_cells; i += 7) {
        worst = std::max(worst, std::fabs(field[i] -
                                          nl_drift_from_density(series, k, grid.center(i), p)));
      }
      // Between centres the interpolant is close; off grid it falls back.
      CHECK(drift(k, 9.0) == nl_drift_from_density(series, k, 9.0, p));
    }
    CHECK(worst < 1e-12);
    for (double v : drift.field(0)) CHECK(v == 0.0);
  }
}

TEST_CASE("nonlinear SDE copies") {
  const auto law = InitialLaw::gaussian(0.0, 1.0);
  const TimeGrid times{0.05, 8};
  const SpatialGrid grid{-8.0, 8.0, 320};
  const auto run = pde_solve(law, grid, times, 0.0025, kAttract);
  const auto series = DensitySeries::from_run(run, times);

  SUBCASE("chi = 0 is the Brownian reference bit for bit") {
    const auto free = pde_solve(law, grid, times, 0.0025, kHeat);
    const auto copies = nl_sde_simulate(50, times, law,
                                        DensitySeries::from_run(free, times), kHeat, 17);
    const auto ref = brownian_reference(50, times, law, 17);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto a = copies.path(i);
      const auto b = ref.path(i);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
  SUBCASE("deterministic in the seed") {
    const auto a = nl_sde_simulate(40, times, law, series, kAttract, 5);
    const auto b = nl_sde_simulate(40, times, law, series, kAttract, 5);
    const auto c = nl_sde_simulate(40, times, law, series, kAttract, 6);
    CHECK(std::equal(a.path(3).begin(), a.path(3).end(), b.path(3).begin()));
    CHECK_FALSE(std::equal(a.path(3).begin(), a.path(3).end(), c.path(3).begin()));
  }
  SUBCASE("attraction shrinks the spread relative to Brownian motion") {
    const std::size_t n = 4000;
    const auto a = nl_sde_simulate(n, times, law, series, kAttract, 9);
    const auto ref = brownian_reference(n, times, law, 9);
    double va = 0.0, vr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      va += std::pow(a.path(i).back(), 2);
      vr += std::pow(ref.path(i).back(), 2);
    }
    CHECK(va < vr);
  }
  CHECK_THROWS_AS(nl_sde_simulate(10, TimeGrid{0.025, 16}, law, series, kAttract, 1),
                  ConfigError);
}

TEST_CASE("drift of a frozen narrow bump is the kernel time integral") {
  // All mass in one cell for all times: the slab sum telescopes to
  // int_0^{t_k} K_u(x - y0) du.
  const SpatialGrid grid{-4.0, 4.0, 800};
  const TimeGrid times{0.02, 10};
  const std::size_t cell = 437;
  DensitySeries series{grid, times, {}};
  for (std::size_t k = 0; k <= times.n_steps; ++k) {
    std::vector<double> rho(grid.n_cells, 0.0);
    rho[cell] = 1.0 / grid.h();
    series.rho.push_back(rho);
  }
  const double y0 = grid.center(cell);
  for (const KernelParams& p : {kAttract, KernelParams{0.8, 1.0}}) {
    const MeanFieldDrift fft(series, p);
    for (std::size_t k : {1u, 4u, 10u}) {
      for (double x : {-1.3, 0.05, 0.4, 2.2}) {
        const double want = kernel_time_integral(x - y0, 0.0, times.time(k), p);
        CHECK(nl_drift_from_density(series, k, x, p) == Approx(want).epsilon(1e-11));
      }
      // On-grid values go through the FFT route.
      for (std::size_t i : {100u, 430u, 445u, 700u}) {
        const double want = kernel_time_integral(grid.center(i) - y0, 0.0, times.time(k), p);
        CHECK(std::fabs(fft.field(k)[i] - want) < 1e-12);
      }
    }
  }
}

TEST_CASE("nonlinear SDE marginals reproduce the PDE density") {
  // 1e5 copies driven by the frozen PDE density should have that density as
  // their law: W1 against the snapshot stays within the Monte Carlo floor
  // plus the O(dt) time error.
  const SpatialGrid grid{-8.0, 8.0, 800};
  const TimeGrid times{5e-3, 100};
  const InitialLaw law = InitialLaw::gaussian(0.0, 1.0);
  const KernelParams strong{0.0, 4.0};
  const PdeRun run = pde_solve(law, grid, times, 1e-4, strong);
  const DensitySeries series = DensitySeries::from_run(run, times);
  const PathEnsemble copies = nl_sde_simulate(100000, times, law, series, strong, 8);
  const auto final_marginal = copies.marginal(times.n_steps);
  const double w1_self = wasserstein1_1d(final_marginal, run.snapshots.back().rho);
  const DensityGrid heat = heat_reference(law, grid, times.horizon());
  const double w1_heat = wasserstein1_1d(final_marginal, heat);
  MESSAGE("W1 to own PDE " << w1_self << ", to heat " << w1_heat);
  CHECK(w1_self < 0.01);
  // The PDE and the heat flow differ by far more than that floor.
  CHECK(w1_heat > 3.0 * w1_self);
}
