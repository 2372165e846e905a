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

#include <cmath>
#include <limits>

namespace chemo {

// Physical parameters of the interaction kernel
//   K_t(x) = exp(-lambda t) * d/dx g_t(x),  g_t the heat kernel of variance t,
// and of the chemotactic coupling chi.
struct KernelParams {
  double lambda = 0.0;  // decay rate of the chemical, >= 0
  double chi = 1.0;     // coupling strength, > 0 (0 only for decoupled runs)

  // Throws DomainError unless lambda >= 0 and chi > 0. Pass
  // allow_zero_coupling to accept chi == 0 (free Brownian reference runs).
  void validate(bool allow_zero_coupling = false) const;
};

// g_t(x) = exp(-x^2 / 2t) / sqrt(2 pi t).
double heat_kernel(double t, double x);

// K_t(x) = exp(-lambda t) (-x) / (sqrt(2 pi) t^{3/2}) exp(-x^2 / 2t).
double kernel_eval(double t, double x, const KernelParams& params);

// The constant C_p with ||K_t||_{L^p} = exp(-lambda t) C_p / t^{1 - 1/(2p)}.
// Obtained once per p by quadrature of the Gaussian moment
// int_0^inf z^p exp(-p z^2 / 2) dz and memoised.
double kernel_lp_constant(double p);

double kernel_lp_norm(double t, double p, const KernelParams& params);

// int_a^b K_u(x) du. For lambda = 0 this is
//   sign(x) (erf(|x| / sqrt(2b)) - erf(|x| / sqrt(2a))),
// evaluated so that the relative error stays near machine precision; for
// lambda > 0 the same integral is computed by adaptive quadrature. a = 0 is
// allowed (the singular endpoint integrates to a finite limit).
double kernel_time_integral(double x, double a, double b,
                            const KernelParams& params);

// Slow reference routes sharing nothing with the ones above: tanh-sinh
// quadrature of kernel_eval over u, and exp-sinh quadrature of |K_t|^p over
// the half line. For verification only.
double kernel_time_integral_reference(double x, double a, double b,
                                      const KernelParams& params);
double kernel_lp_norm_reference(double t, double p, const KernelParams& params);

// Precomputed 1/sqrt(2u) for a slab endpoint; infinity at u = 0.
inline double inv_sqrt_twice(double u) noexcept {
  return u > 0.0 ? 1.0 / std::sqrt(2.0 * u)
                 : std::numeric_limits<double>::infinity();
}

// Hot-loop form of kernel_time_integral for lambda = 0 with precomputed
// endpoint scales inv_b = 1/sqrt(2b), inv_a = 1/sqrt(2a). Absolute error is
// O(machine epsilon); odd in x bit-for-bit.
inline double erf_slab(double x, double inv_b, double inv_a) noexcept {
  if (x == 0.0) return 0.0;
  const double ax = std::fabs(x);
  const double ub = ax * inv_b;
  const double ua = ax * inv_a;
  double magnitude;
  if (ub >= 0.5) {
    magnitude = std::erfc(ub) - std::erfc(ua);
  } else {
    magnitude = std::erf(ua) - std::erf(ub);
  }
  return x > 0.0 ? -magnitude : magnitude;
}

}  // namespace chemo
