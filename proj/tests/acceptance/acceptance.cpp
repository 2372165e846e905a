// One PASS/FAIL line per acceptance criterion.
//
//   acceptance [--only 1,3] [--expect-fail 5]
//
// Exit status is 0 when the set of failing criteria equals the --expect-fail
// set, so a known-red criterion stays visible without breaking the suite, and
// an unexpected pass is reported as loudly as an unexpected failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "chemo/diagnostics.hpp"
#include "chemo/kernel.hpp"
#include "chemo/mean_field.hpp"
#include "chemo/particles.hpp"
#include "chemo/rng.hpp"
#include "chemo/stochastic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace chemo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Budgets quoted for 8 cores are scaled to the cores actually present.
double core_scale() {
  return std::max(1.0, 8.0 / static_cast<double>(std::max(1, omp_get_max_threads())));
}

const InitialLaw kGauss = InitialLaw::gaussian(0.0, 1.0);

// ---- 1 ----
Outcome kernel_norm_law() {
  const KernelParams p{0.0, 1.0};
  const std::vector<double> ts{0.25, 0.5, 1.0, 2.0, 4.0};
  double worst = 0.0;
  for (double q : {1.0, 2.0, 4.0}) {
    // Closed form and independent quadrature of |K_t|^p.
    std::vector<double> lx, ly, lq;
    for (double t : ts) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(kernel_lp_norm(t, q, p)));
      lq.push_back(std::log(kernel_lp_norm_reference(t, q, p)));
    }
    const double want = -(1.0 - 1.0 / (2.0 * q));
    worst = std::max({worst, std::fabs(least_squares(lx, ly).slope - want),
                      std::fabs(least_squares(lx, lq).slope - want)});
  }
  return {worst < 1e-3, "max slope error " + fmt(worst) + " (tol 1e-3)"};
}

// ---- 2 ----
Outcome erf_oracle() {
  const KernelParams p{0.0, 1.0};
  const CounterRng rng(2026, StreamDomain::replica);
  double worst = 0.0;
  for (std::uint64_t n = 0; n < 1000; ++n) {
    const auto u = rng.uniform_pair(n, 0);
    const auto v = rng.uniform_pair(n, 1);
    const double x = -3.0 + 6.0 * u[0];
    const double a = (n % 10 == 0) ? 0.0 : 2.0 * u[1];
    const double b = a + std::pow(10.0, -3.0 + 3.5 * v[0]);
    const double got = kernel_time_integral(x, a, b, p);
    const double want = kernel_time_integral_reference(x, a, b, p);
    if (got != want) worst = std::max(worst, std::fabs(got - want) / std::fabs(want));
  }
  return {worst < 1e-10, "max relative error " + fmt(worst) + " over 1000 draws (tol 1e-10)"};
}

// ---- 3 ----
Outcome pde_heat_oracle() {
  const SpatialGrid grid{-8.0, 8.0, 1600};
  const TimeGrid times{0.01, 100};
  const PdeRun run = pde_solve(kGauss, grid, times, 5e-5, KernelParams{0.0, 0.0});
  const auto& rho = run.snapshots.back().rho;
  double err = 0.0;
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    err = std::max(err, std::fabs(rho.values[i] - kGauss.evolved_density(1.0, grid.center(i))));
  }
  return {err < 1e-3 && run.cumulative_mass_drift < 1e-8,
          "max error at t=1 " + fmt(err) + " (tol 1e-3), mass drift " +
              fmt(run.cumulative_mass_drift) + " (tol 1e-8)"};
}

// ---- 4 ----
Outcome girsanov() {
  GirsanovCheckConfig cfg;
  cfg.n_particles = 8;
  cfg.r = 1;
  cfg.grid = TimeGrid{1.0 / 256.0, 64};
  cfg.initial = kGauss;
  cfg.n_replicas = 10000;
  cfg.seed = 404;
  const auto z = girsanov_martingale_check(cfg, KernelParams{0.0, 1.0});
  const bool ok = std::fabs(z.estimate - 1.0) <= 3.0 * z.std_error && z.std_error < 0.05 &&
                  !z.unstable;
  return {ok, "E Z = " + fmt(z.estimate) + " +- " + fmt(z.std_error) + " (need |E Z - 1| <= 3 SE, SE < 0.05)"};
}

// ---- 5 ----
Outcome lemma31() {
  const TimeGrid grid{0.005, 100};
  const std::vector<double> x(grid.n_steps + 1, 0.0);
  const std::vector<double> windows{0.02, 0.04, 0.08, 0.16};
  Lemma31Config base;
  base.t1 = 0.0;
  base.n_samples = 10000;
  base.seed = 31;
  const ScalingFit fit = lemma31_scaling_study(windows, base, x, grid, KernelParams{0.0, 1.0});
  return {fit.slope >= 0.35 && fit.slope <= 0.65,
          "slope " + fmt(fit.slope) + " (need [0.35, 0.65]; E F_t = 1/3 makes it 1)"};
}

// ---- 6 ----
Outcome appendix_damping() {
  ExpMomentConfig cfg;
  cfg.alpha = 1.0;
  cfg.grid = TimeGrid{0.005, 100};
  cfg.y_law = YLaw::brownian();
  cfg.n_samples = 10000;
  cfg.seed = 66;
  std::vector<ExpMomentEstimate> est;
  for (std::size_t n : {8u, 32u, 128u}) {
    cfg.scale_inv_n = n;
    est.push_back(exp_moment_mc(cfg, KernelParams{0.0, 1.0}));
  }
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < est.size(); ++i) {
    ok = ok && !est[i].unstable;
    if (i > 0) {
      ok = ok && est[i].estimate <=
                     est[i - 1].estimate + 2.0 * std::hypot(est[i].std_error, est[i - 1].std_error);
    }
    detail += (i ? ", " : "") + fmt(est[i].estimate) + "+-" + fmt(est[i].std_error);
  }
  return {ok, "N=8,32,128: " + detail + " (nonincreasing within 2 SE)"};
}

// ---- 7 ----
Outcome chaos() {
  ChaosConfig cfg;
  cfg.n_values = {32, 128, 512};
  cfg.replicas = 16;
  cfg.times = {0.5};
  cfg.grid = TimeGrid{5e-3, 100};
  cfg.initial = kGauss;
  cfg.params = KernelParams{0.0, 1.0};
  cfg.options.tail_cutoff = true;
  cfg.kde_grid = SpatialGrid{-8.0, 8.0, 1600};
  const PdeRun pde = pde_solve(cfg.initial, cfg.kde_grid, cfg.grid, 1e-4, cfg.params);
  const ChaosReport r = chaos_study(cfg, 7, {pde.snapshots.back().rho});
  bool decreasing = true;
  for (std::size_t a = 0; a + 1 < 3; ++a) {
    decreasing = decreasing && r.w1_mean[a][0] - r.w1_mean[a + 1][0] >
                                   2.0 * std::hypot(r.w1_se[a][0], r.w1_se[a + 1][0]);
  }
  const double ratio = r.w1_mean[2][0] / r.w1_mean[0][0];

  ChaosConfig control = cfg;
  control.params = KernelParams{0.0, 0.0};
  const ChaosReport c =
      chaos_study(control, 7, {heat_reference(cfg.initial, cfg.kde_grid, 0.5)});
  const double slope = c.fit_slope[0];
  const bool ok = decreasing && ratio < 0.6 && std::fabs(slope + 0.5) <= 0.15;
  std::string detail = "W1 mean ";
  for (std::size_t a = 0; a < 3; ++a) {
    detail += (a ? ", " : "") + fmt(r.w1_mean[a][0]) + "+-" + fmt(r.w1_se[a][0]);
  }
  return {ok, detail + "; W1(512)/W1(32) " + fmt(ratio) + " (< 0.6); chi=0 slope " + fmt(slope) +
                  " (-0.5 +- 0.15)"};
}

// ---- 8 ----
Outcome density_decay() {
  const SpatialGrid grid{-8.0, 8.0, 1600};
  const TimeGrid times{0.01, 100};
  const PdeRun run = pde_solve(kGauss, grid, times, 5e-5, KernelParams{0.0, 1.0});
  std::vector<double> ts;
  for (std::size_t k = 1; k <= times.n_steps; ++k) ts.push_back(times.time(k));
  const auto series = l2_decay_series(run.snapshots, ts);
  double peak = 0.0;
  for (const auto& p : series) peak = std::max(peak, p.value);
  const double ratio = peak / series.back().value;
  return {ratio <= 3.0, "max t^1/4 |rho_t|_2 over its t=1 value " + fmt(ratio) + " (<= 3)"};
}

// ---- 9 ----
std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CHEMO_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "chemo_acceptance_replay";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"kernel-check", "--n-random 200"},
      {"simulate", "--n-particles 48 --horizon 0.25"},
      {"pde", "--n-cells 400 --max-dt 1e-4 --horizon 0.5"},
      {"chaos", "--n-values 16,32 --replicas 2 --horizon 0.1 --times 0.1 --n-cells 400"},
      {"stochastic", "--lemma31-n-samples 300 --exp-moment-n-samples 300 "
                     "--girsanov-n-replicas 200 --novikov-n-replicas 200"},
      {"bench", "--n-values 16,64 --horizon 0.25"},
  };
  std::size_t files = 0;
  std::vector<std::string> problems;
  for (const auto& [command, args] : runs) {
    const fs::path a = root / (command + "_a");
    const fs::path b = root / (command + "_b");
    const int code_a = run_cli(command + " " + args + " -o " + a.string(), root / "log.txt");
    const int code_b = run_cli(command + " -c " + (a / "manifest.json").string() + " -o " +
                                   b.string(),
                               root / "log.txt");
    if (code_a != code_b || !fs::exists(b / "manifest.json")) {
      problems.push_back(command + " exit " + std::to_string(code_a) + "/" +
                         std::to_string(code_b));
      continue;
    }
    const json ma = json::parse(slurp(a / "manifest.json"));
    const json mb = json::parse(slurp(b / "manifest.json"));
    if (ma.at("outputs").size() != mb.at("outputs").size()) {
      problems.push_back(command + " output lists differ");
      continue;
    }
    for (std::size_t i = 0; i < ma.at("outputs").size(); ++i) {
      const auto& oa = ma.at("outputs")[i];
      if (!oa.at("deterministic").get<bool>()) continue;
      const std::string rel = oa.at("path");
      ++files;
      if (slurp(a / rel) != slurp(b / rel) || oa.at("sha256") != mb.at("outputs")[i].at("sha256")) {
        problems.push_back(command + ":" + rel);
      }
    }
    if (command == "bench" && code_a != 0) problems.push_back("bench cutoff agreement");
  }

  // Cutoff on/off at the criterion-7 step size.
  const TimeGrid grid{5e-3, 100};
  const KernelParams p{0.0, 1.0};
  const auto on = simulate(64, grid, kGauss, p, 99, DriftOptions{true});
  const auto off = simulate(64, grid, kGauss, p, 99, DriftOptions{false});
  double gap = 0.0;
  for (std::size_t i = 0; i < 64; ++i) {
    gap = std::max(gap, std::fabs(on.path(i).back() - off.path(i).back()));
  }
  if (gap > 1e-12) problems.push_back("cutoff gap " + fmt(gap));

  std::string detail = std::to_string(files) + " deterministic files identical across 6 replays, cutoff gap " + fmt(gap);
  for (const auto& s : problems) detail += "; MISMATCH " + s;
  return {problems.empty(), detail};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: none
  bool budget_per_8_cores;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::vector<int> expect_fail;
  app.add_option("--only", only, "run these criteria")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to be red")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "kernel norm law", 1.0, false, kernel_norm_law},
      {2, "erf time-integral oracle", 10.0, false, erf_oracle},
      {3, "PDE heat oracle", 30.0, false, pde_heat_oracle},
      {4, "Girsanov martingale check", 300.0, true, girsanov},
      {5, "Lemma 3.1 window scaling", 120.0, false, lemma31},
      {6, "Appendix 1/N damping", 120.0, false, appendix_damping},
      {7, "propagation of chaos", 900.0, true, chaos},
      {8, "density decay", 60.0, false, density_decay},
      {9, "determinism", 0.0, false, determinism},
  };

  std::set<int> failed;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt(secs) + " s";
    if (c.budget_seconds > 0.0) {
      const double budget = c.budget_seconds * (c.budget_per_8_cores ? core_scale() : 1.0);
      timing += " of " + fmt(budget) + " s";
      if (secs > budget) {
        out.pass = false;
        out.detail += "; over time budget";
      }
    }
    if (!out.pass) failed.insert(c.id);
    std::printf("%s criterion %d (%s): %s [%s]\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), out.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expect_fail) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  }
  std::printf("%d of %d criteria passed\n", ran - static_cast<int>(failed.size()), ran);
  if (failed != expected) {
    for (int id : failed) {
      if (!expected.count(id)) std::printf("unexpected failure: criterion %d\n", id);
    }
    for (int id : expected) {
      if (!failed.count(id)) std::printf("unexpected pass: criterion %d\n", id);
    }
    return 1;
  }
  for (int id : expected) std::printf("known red (see ledger): criterion %d\n", id);
  return 0;
}
