#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "eacc/errors.hpp"

namespace eacc {

struct VehicleState {
  double x = 0.0;  // geometric center, m
  double v = 0.0;  // m/s
};

struct ControlInput {
  double a = 0.0;  // m/s^2
};

struct VehicleGeometry {
  double length = 4.8;  // m
};

// Speed and acceleration envelope shared by the world model and the controller.
struct MotionLimits {
  double v_min = 0.0;
  double v_max = 34.0;
  double a_min = -6.0;
  double a_max = 6.0;
};

// Sampled lead speed trace, played back with linear interpolation.
struct SpeedTrajectory {
  double dt_sample = 1.0;
  std::vector<double> samples;

  double duration() const {
    return samples.empty() ? 0.0 : dt_sample * static_cast<double>(samples.size() - 1);
  }
};

// Exact integration of piecewise-constant acceleration. If the speed leaves
// [v_min, v_max] during the step, the vehicle accelerates until it hits the
// limit and cruises at the limit for the remainder.
inline VehicleState step_kinematics(const VehicleState& s, const ControlInput& u, double dt,
                                    const MotionLimits& lim = {}) {
  if (!std::isfinite(s.x) || !std::isfinite(s.v) || !std::isfinite(u.a) || !std::isfinite(dt))
    throw DomainError("step_kinematics: non-finite input");
  detail::require(dt > 0.0, "step_kinematics: dt must be positive");
  detail::require(u.a >= lim.a_min && u.a <= lim.a_max,
                  "step_kinematics: acceleration outside [a_min, a_max]");
  detail::require(s.v >= lim.v_min && s.v <= lim.v_max,
                  "step_kinematics: speed outside [v_min, v_max]");

  const double a = u.a;
  const double v_free = s.v + a * dt;
  double limit = v_free;
  if (v_free > lim.v_max) limit = lim.v_max;
  if (v_free < lim.v_min) limit = lim.v_min;

  if (limit == v_free) return {s.x + s.v * dt + 0.5 * a * dt * dt, v_free};

  // a != 0 here, otherwise v_free == s.v would already be within limits.
  const double t_hit = (limit - s.v) / a;
  const double x_hit = s.x + s.v * t_hit + 0.5 * a * t_hit * t_hit;
  return {x_hit + limit * (dt - t_hit), limit};
}

// Lead rear bumper minus ego front bumper. Negative means overlap.
inline double bumper_headway(const VehicleState& lead, const VehicleState& ego,
                             const VehicleGeometry& g_lead, const VehicleGeometry& g_ego) {
  return (lead.x - 0.5 * g_lead.length) - (ego.x + 0.5 * g_ego.length);
}

inline double lead_speed_at(const SpeedTrajectory& traj, double t) {
  if (!std::isfinite(t)) throw DomainError("lead_speed_at: non-finite time");
  detail::require(t >= 0.0, "lead_speed_at: negative time");
  detail::require(traj.samples.size() >= 2 && traj.dt_sample > 0.0,
                  "lead_speed_at: trajectory needs >= 2 samples and dt_sample > 0");
  const double pos = t / traj.dt_sample;
  const auto last = traj.samples.size() - 1;
  if (pos >= static_cast<double>(last)) return traj.samples.back();
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return traj.samples[i] + w * (traj.samples[i + 1] - traj.samples[i]);
}

}  // namespace eacc
