#pragma once

// Shared fixtures: one small trained ensemble per test process.

#include <random>

#include "eacc/eacc.hpp"

namespace eacc::testing {

inline const perception::Ensemble& trained_ensemble() {
  static const perception::Ensemble ens = [] {
    perception::Ensemble e;
    const auto data = perception::generate_training_set(e.sensor, 4000, e.sensor.seed);
    e.members = perception::build_ensemble(data, 6, {}, {}, {e.sensor.d_lo, e.sensor.d_hi});
    return e;
  }();
  return ens;
}

inline double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_var(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace eacc::testing
