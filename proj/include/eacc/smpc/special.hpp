#pragma once

#include <cmath>
#include <numbers>

#include "eacc/errors.hpp"

namespace eacc::smpc {

// Giles' single-precision polynomial as a starting point, refined with
// Halley steps on erf(x) - y until the update stalls.
inline double inverse_erf(double y) {
  if (!(std::fabs(y) < 1.0)) throw DomainError("inverse_erf: |y| must be < 1");
  if (y == 0.0) return 0.0;

  double w = -std::log((1.0 - y) * (1.0 + y));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  double x = p * y;

  const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
  for (int it = 0; it < 4; ++it) {
    const double f = std::erf(x) - y;
    const double df = two_over_sqrt_pi * std::exp(-x * x);
    const double step = f / (df + x * f);
    x -= step;
    if (std::fabs(step) <= 1e-16 * std::fabs(x)) break;
  }
  return x;
}

// sqrt(2 var) * erfinv(1 - 2 eps): the (1 - eps)-quantile offset of N(0, var).
inline double tightening_margin(double var, double eps) {
  detail::require(var >= 0.0 && std::isfinite(var), "tightening_margin: var must be >= 0");
  detail::require(eps > 0.0 && eps < 1.0, "tightening_margin: eps must lie in (0, 1)");
  if (var == 0.0) return 0.0;
  return std::sqrt(2.0 * var) * inverse_erf(1.0 - 2.0 * eps);
}

}  // namespace eacc::smpc
