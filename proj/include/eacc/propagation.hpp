#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "eacc/errors.hpp"

namespace eacc::propagation {

// Two consecutive fused headway estimates, dt apart, and the acceleration
// applied in between.
struct BeliefState {
  double p_prev = 0.0;
  double var_prev = 1.0;
  double p_now = 0.0;
  double var_now = 1.0;
  double a_prev = 0.0;
  double dt = 1.0;
};

// Zero variances are admitted only in the degenerate test mode, where the
// belief collapses to a point and the recursion becomes deterministic.
enum class VarianceMode { strict, allow_degenerate };

inline void validate(const BeliefState& b, VarianceMode mode = VarianceMode::strict) {
  detail::require(std::isfinite(b.p_prev) && std::isfinite(b.p_now) && std::isfinite(b.a_prev) &&
                      std::isfinite(b.var_prev) && std::isfinite(b.var_now),
                  "BeliefState: non-finite field");
  detail::require(b.dt > 0.0, "BeliefState: dt must be positive");
  if (mode == VarianceMode::strict)
    detail::require(b.var_prev > 0.0 && b.var_now > 0.0, "BeliefState: variances must be > 0");
  else
    detail::require(b.var_prev >= 0.0 && b.var_now >= 0.0, "BeliefState: negative variance");
}

struct RelativeSpeedBelief {
  double p_rel0 = 0.0;
  double var_rel0 = 0.0;
};

inline RelativeSpeedBelief bootstrap_relative_speed(const BeliefState& b,
                                                    VarianceMode mode = VarianceMode::strict) {
  validate(b, mode);
  return {(b.p_now - b.p_prev) / b.dt - 0.5 * b.a_prev * b.dt,
          (b.var_now + b.var_prev) / (b.dt * b.dt)};
}

struct VarianceSequences {
  std::vector<double> var;      // headway, indices 0..N
  std::vector<double> var_rel;  // relative speed, indices 0..N
};

// Independent of the acceleration plan:
//   var[i+1]     = var[i] + dt^2 var_rel[i]
//   var_rel[i+1] = 2 var[i] / dt^2 + var_rel[i]
inline VarianceSequences propagate_variances(double var0, double var_rel0, double dt, int n) {
  detail::require(n >= 1, "propagate_variances: N must be >= 1");
  detail::require(dt > 0.0, "propagate_variances: dt must be positive");
  detail::require(var0 >= 0.0 && var_rel0 >= 0.0, "propagate_variances: negative variance");
  VarianceSequences out;
  out.var.resize(static_cast<std::size_t>(n) + 1);
  out.var_rel.resize(static_cast<std::size_t>(n) + 1);
  out.var[0] = var0;
  out.var_rel[0] = var_rel0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    out.var[i + 1] = out.var[i] + dt * dt * out.var_rel[i];
    out.var_rel[i + 1] = 2.0 / (dt * dt) * out.var[i] + out.var_rel[i];
  }
  return out;
}

struct MeanSequences {
  std::vector<double> p;      // indices 0..N
  std::vector<double> p_rel;  // indices 0..N
};

// Lead assumed at constant speed over the horizon:
//   p[i+1]     = p[i] + p_rel[i] dt - a[i] dt^2 / 2
//   p_rel[i+1] = p_rel[i] - a[i] dt
inline MeanSequences propagate_means(double p0, double p_rel0, std::span<const double> accs,
                                     double dt) {
  detail::require(!accs.empty(), "propagate_means: need at least one acceleration");
  detail::require(dt > 0.0, "propagate_means: dt must be positive");
  MeanSequences out;
  out.p.resize(accs.size() + 1);
  out.p_rel.resize(accs.size() + 1);
  out.p[0] = p0;
  out.p_rel[0] = p_rel0;
  for (std::size_t i = 0; i < accs.size(); ++i) {
    out.p[i + 1] = out.p[i] + out.p_rel[i] * dt - 0.5 * accs[i] * dt * dt;
    out.p_rel[i + 1] = out.p_rel[i] - accs[i] * dt;
  }
  return out;
}

struct PredictedMoments {
  std::vector<double> p;
  std::vector<double> var;
  std::vector<double> p_rel;
  std::vector<double> var_rel;
};

inline PredictedMoments predict(const BeliefState& b, std::span<const double> accs, int n,
                                VarianceMode mode = VarianceMode::strict) {
  detail::require(n >= 1 && accs.size() == static_cast<std::size_t>(n),
                  "predict: acceleration plan length must equal N");
  const auto rel = bootstrap_relative_speed(b, mode);
  auto vars = propagate_variances(b.var_now, rel.var_rel0, b.dt, n);
  auto means = propagate_means(b.p_now, rel.p_rel0, accs, b.dt);
  return {std::move(means.p), std::move(vars.var), std::move(means.p_rel),
          std::move(vars.var_rel)};
}

}  // namespace eacc::propagation
