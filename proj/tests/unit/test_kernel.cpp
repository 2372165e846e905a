#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "chemo/error.hpp"
#include "chemo/kernel.hpp"
#include "doctest.h"

using chemo::KernelParams;
using doctest::Approx;

namespace {

// Quadrature of the kernel itself in the time variable; shares nothing with
// the erf route.
double time_integral_oracle(double x, double a, double b, double lambda = 0.0) {
  const KernelParams params{lambda, 1.0};
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  auto f = [&](double u) {
    return u <= 0.0 ? 0.0 : chemo::kernel_eval(u, x, params);
  };
  return integrator.integrate(f, a, b, 1e-15);
}

double lp_norm_oracle(double t, double p) {
  // |K_t| is even: twice the half-line integral.
  boost::math::quadrature::exp_sinh<double> integrator;
  const KernelParams params{};
  auto f = [&](double x) {
    return std::pow(std::fabs(chemo::kernel_eval(t, x, params)), p);
  };
  return std::pow(2.0 * integrator.integrate(f, 0.0,
                                             std::numeric_limits<double>::infinity(),
                                             1e-14),
                  1.0 / p);
}

}  // namespace

TEST_CASE("kernel_eval closed form") {
  const KernelParams params{};
  CHECK(chemo::kernel_eval(1.0, 0.0, params) == 0.0);
  CHECK(chemo::kernel_eval(0.5, 0.3, params) ==
        -chemo::kernel_eval(0.5, -0.3, params));
  // -phi(1), phi the standard normal density
  CHECK(chemo::kernel_eval(1.0, 1.0, params) ==
        Approx(-0.24197072451914335).epsilon(1e-14));
  CHECK(std::fabs(chemo::kernel_eval(1.0, 60.0, params)) < 1e-300);
  const KernelParams damped{0.7, 1.0};
  CHECK(chemo::kernel_eval(2.0, 0.4, damped) ==
        Approx(std::exp(-1.4) * chemo::kernel_eval(2.0, 0.4, params)));
}

TEST_CASE("kernel is the x-derivative of the heat kernel") {
  const KernelParams params{};
  for (double t : {0.1, 1.0, 3.0}) {
    for (double x : {-1.2, 0.05, 0.9}) {
      const double h = 1e-5;
      const double fd = (chemo::heat_kernel(t, x + h) - chemo::heat_kernel(t, x - h)) /
                        (2 * h);
      CHECK(chemo::kernel_eval(t, x, params) == Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("kernel antisymmetry is exact") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ut(1e-3, 5.0), ux(-6.0, 6.0);
  const KernelParams params{0.3, 1.0};
  for (int n = 0; n < 1000; ++n) {
    const double t = ut(gen), x = ux(gen);
    CHECK(chemo::kernel_eval(t, x, params) == -chemo::kernel_eval(t, -x, params));
  }
}

TEST_CASE("kernel_eval rejects bad input") {
  const KernelParams params{};
  CHECK_THROWS_AS(chemo::kernel_eval(0.0, 1.0, params), chemo::DomainError);
  CHECK_THROWS_AS(chemo::kernel_eval(-1.0, 1.0, params), chemo::DomainError);
  CHECK_THROWS_AS(
      chemo::kernel_eval(1.0, std::numeric_limits<double>::infinity(), params),
      chemo::DomainError);
  CHECK_THROWS_AS(chemo::kernel_eval(1.0, std::nan(""), params),
                  chemo::DomainError);
}

TEST_CASE("L^p norms against quadrature of |K_t|^p") {
  const KernelParams params{};
  // frozen from 30-digit quadrature
  CHECK(chemo::kernel_lp_norm(1.0, 1.0, params) ==
        Approx(0.79788456080286536).epsilon(1e-12));
  CHECK(chemo::kernel_lp_norm(1.0, 2.0, params) ==
        Approx(0.37556277223247124).epsilon(1e-12));
  CHECK(chemo::kernel_lp_norm(1.0, 4.0, params) ==
        Approx(0.27776362314555307).epsilon(1e-12));
  CHECK(chemo::kernel_lp_norm(1.0, 3.5, params) ==
        Approx(0.28851335385633847).epsilon(1e-12));
  CHECK(chemo::kernel_lp_norm(1.0, 1.0, params) ==
        Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-13));
  for (double t : {0.3, 2.5}) {
    for (double p : {1.0, 1.5, 2.0, 4.0}) {
      CHECK(chemo::kernel_lp_norm(t, p, params) ==
            Approx(lp_norm_oracle(t, p)).epsilon(1e-9));
    }
  }
  const KernelParams damped{0.5, 1.0};
  CHECK(chemo::kernel_lp_norm(2.0, 2.0, damped) ==
        Approx(std::exp(-1.0) * chemo::kernel_lp_norm(2.0, 2.0, params)));
}

TEST_CASE("L^p norm scales as t^{-(1 - 1/2p)}") {
  const KernelParams params{};
  for (double p : {1.0, 1.25, 2.0, 3.0, 4.0, 10.0}) {
    const double exponent = -(1.0 - 1.0 / (2.0 * p));
    for (double t : {0.1, 1.0, 7.0}) {
      CHECK(chemo::kernel_lp_norm(4 * t, p, params) /
                chemo::kernel_lp_norm(t, p, params) ==
            Approx(std::pow(4.0, exponent)).epsilon(1e-12));
    }
    const double lo = std::log(chemo::kernel_lp_norm(0.0625, p, params));
    for (int e = -3; e <= 4; ++e) {
      const double t = std::ldexp(1.0, e);
      const double slope =
          (std::log(chemo::kernel_lp_norm(t, p, params)) - lo) /
          (std::log(t) - std::log(0.0625));
      CHECK(slope == Approx(exponent).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(chemo::kernel_lp_norm(1.0, 0.5, params), chemo::DomainError);
  CHECK_THROWS_AS(chemo::kernel_lp_norm(0.0, 2.0, params), chemo::DomainError);
}

TEST_CASE("kernel_time_integral examples") {
  const KernelParams params{};
  CHECK(chemo::kernel_time_integral(0.0, 0.2, 0.9, params) == 0.0);
  CHECK(chemo::kernel_time_integral(1.0, 0.5, 1.0, params) ==
        Approx(std::erf(1.0 / std::sqrt(2.0)) - std::erf(1.0)).epsilon(1e-14));
  CHECK(chemo::kernel_time_integral(1.0, 0.5, 1.0, params) ==
        Approx(-0.16001130081262897).epsilon(1e-13));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(chemo::kernel_time_integral(1.0, 0.0, inf, params) == Approx(-1.0).epsilon(1e-15));
  CHECK(chemo::kernel_time_integral(0.3, 0.0, 1e12, params) == Approx(-1.0).epsilon(1e-6));
  CHECK(chemo::kernel_time_integral(-0.3, 0.0, inf, params) == Approx(1.0));
  CHECK_THROWS_AS(chemo::kernel_time_integral(1.0, 1.0, 1.0, params),
                  chemo::DomainError);
  CHECK_THROWS_AS(chemo::kernel_time_integral(1.0, 1.0, 0.5, params),
                  chemo::DomainError);
  CHECK_THROWS_AS(chemo::kernel_time_integral(1.0, -0.1, 0.5, params),
                  chemo::DomainError);
}

TEST_CASE("kernel_time_integral matches time quadrature") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), ua(0.0, 2.0),
      uw(-3.0, 0.5);
  for (double lambda : {0.0, 0.8}) {
    const KernelParams params{lambda, 1.0};
    double worst = 0.0;
    for (int n = 0; n < 300; ++n) {
      const double x = ux(gen);
      const double a = (n % 10 == 0) ? 0.0 : ua(gen);
      const double b = a + std::pow(10.0, uw(gen));
      const double got = chemo::kernel_time_integral(x, a, b, params);
      const double want = time_integral_oracle(x, a, b, lambda);
      worst = std::max(worst, std::fabs(got - want) / std::fabs(want));
      CHECK(std::fabs(got) <= 1.0);
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("erf_slab agrees with the checked routine and is odd") {
  const KernelParams params{};
  for (double x : {-2.0, -0.01, 0.3, 4.0}) {
    for (auto [a, b] : {std::pair{0.0, 0.1}, std::pair{0.1, 0.2}, std::pair{1.0, 3.0}}) {
      const double fast =
          chemo::erf_slab(x, chemo::inv_sqrt_twice(b), chemo::inv_sqrt_twice(a));
      CHECK(fast == Approx(chemo::kernel_time_integral(x, a, b, params)).epsilon(1e-12));
      CHECK(fast ==
            -chemo::erf_slab(-x, chemo::inv_sqrt_twice(b), chemo::inv_sqrt_twice(a)));
    }
  }
}
