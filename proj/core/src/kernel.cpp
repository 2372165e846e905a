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

#include "chemo/kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "chemo/error.hpp"

namespace chemo {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589;

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(what) + ": time must be positive and finite");
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + ": position must be finite");
  }
}

// (2/sqrt(pi)) int_{lo}^{hi} exp(-v^2 - damping / v^2) dv, hi may be +inf.
double gaussian_tail_integral(double lo, double hi, double damping) {
  auto integrand = [damping](double v) {
    const double base = -v * v;
    if (damping == 0.0) return std::exp(base);
    if (v == 0.0) return 0.0;
    return std::exp(base - damping / (v * v));
  };
  if (std::isfinite(hi) && damping == 0.0 && (hi * hi - lo * lo) < 1.0) {
    return kTwoOverSqrtPi *
           boost::math::quadrature::gauss<double, 20>::integrate(integrand, lo,
                                                                 hi);
  }
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          integrand, lo, hi, 12, 1e-12, &error);
  return kTwoOverSqrtPi * value;
}

}  // namespace

void KernelParams::validate(bool allow_zero_coupling) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("KernelParams: lambda must be finite and >= 0");
  }
  const bool chi_ok = allow_zero_coupling ? chi >= 0.0 : chi > 0.0;
  if (!chi_ok || !std::isfinite(chi)) {
    throw DomainError(allow_zero_coupling
                          ? "KernelParams: chi must be finite and >= 0"
                          : "KernelParams: chi must be finite and > 0");
  }
}

double heat_kernel(double t, double x) {
  require_positive_time(t, "heat_kernel");
  require_finite(x, "heat_kernel");
  return kInvSqrt2Pi / std::sqrt(t) * std::exp(-x * x / (2.0 * t));
}

double kernel_eval(double t, double x, const KernelParams& params) {
  require_positive_time(t, "kernel_eval");
  require_finite(x, "kernel_eval");
  const double gauss = std::exp(-x * x / (2.0 * t));
  if (gauss == 0.0) return 0.0;
  const double damping = params.lambda > 0.0 ? std::exp(-params.lambda * t) : 1.0;
  return damping * (-x) * kInvSqrt2Pi * gauss / (t * std::sqrt(t));
}

double kernel_lp_constant(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw DomainError("kernel_lp_constant: p must satisfy 1 <= p < inf");
  }
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(p); it != cache.end()) return it->second;
  }
  // ||K_t||_p^p = 2 (2 pi)^{-p/2} t^{1/2 - p} int_0^inf z^p e^{-p z^2/2} dz
  auto moment_integrand = [p](double z) {
    return std::pow(z, p) * std::exp(-0.5 * p * z * z);
  };
  double error = 0.0;
  const double moment =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          moment_integrand, 0.0, std::numeric_limits<double>::infinity(), 12,
          1e-12, &error);
  const double constant =
      std::pow(2.0 * std::pow(2.0 * std::numbers::pi, -0.5 * p) * moment,
               1.0 / p);
  std::lock_guard lock(mutex);
  cache.emplace(p, constant);
  return constant;
}

double kernel_lp_norm(double t, double p, const KernelParams& params) {
  require_positive_time(t, "kernel_lp_norm");
  const double constant = kernel_lp_constant(p);
  const double damping = params.lambda > 0.0 ? std::exp(-params.lambda * t) : 1.0;
  return damping * constant * std::pow(t, -(1.0 - 1.0 / (2.0 * p)));
}

double kernel_time_integral(double x, double a, double b,
                            const KernelParams& params) {
  if (!(a >= 0.0) || !std::isfinite(a) || std::isnan(b)) {
    throw DomainError("kernel_time_integral: need 0 <= a < b");
  }
  if (!(b > a)) {
    throw DomainError("kernel_time_integral: need b > a");
  }
  require_finite(x, "kernel_time_integral");
  if (x == 0.0) return 0.0;

  const double ax = std::fabs(x);
  const double ub = ax * inv_sqrt_twice(b);  // b may be +inf: ub = 0
  const double ua = ax * inv_sqrt_twice(a);  // a = 0: ua = +inf
  const double sign = x > 0.0 ? -1.0 : 1.0;

  if (params.lambda > 0.0) {
    // Substituting v = |x| / sqrt(2u) turns e^{-lambda u} K_u(x) du into
    // -(2/sqrt(pi)) sign(x) e^{-v^2 - lambda x^2 / (2 v^2)} dv.
    return sign * gaussian_tail_integral(ub, ua, params.lambda * x * x / 2.0);
  }
  if (std::isfinite(ua) && ua * ua - ub * ub < 1.0) {
    // Thin slab: the erf difference would cancel, integrate the Gaussian
    // directly instead.
    return sign * gaussian_tail_integral(ub, ua, 0.0);
  }
  return erf_slab(x, inv_sqrt_twice(b), inv_sqrt_twice(a));
}

double kernel_time_integral_reference(double x, double a, double b,
                                      const KernelParams& params) {
  if (!(a >= 0.0) || !(b > a) || !std::isfinite(x)) {
    throw DomainError("kernel_time_integral_reference: need finite x, 0 <= a < b");
  }
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  auto f = [&](double u) { return u <= 0.0 ? 0.0 : kernel_eval(u, x, params); };
  if (std::isinf(b)) {
    boost::math::quadrature::exp_sinh<double> tail;
    return tail.integrate(f, a, b, 1e-15);
  }
  return integrator.integrate(f, a, b, 1e-15);
}

double kernel_lp_norm_reference(double t, double p, const KernelParams& params) {
  if (!(t > 0.0) || !(p >= 1.0) || !std::isfinite(p)) {
    throw DomainError("kernel_lp_norm_reference: need t > 0, 1 <= p < inf");
  }
  // |K_t| is even: twice the half-line integral.
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double x) { return std::pow(std::fabs(kernel_eval(t, x, params)), p); };
  const double half =
      integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
  return std::pow(2.0 * half, 1.0 / p);
}

}  // namespace chemo
