#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/harness/metrics.hpp"
#include "eacc/harness/records.hpp"
#include "eacc/harness/trajectories.hpp"
#include "eacc/kinematics.hpp"
#include "eacc/perception/ensemble.hpp"
#include "eacc/perception/model_io.hpp"
#include "eacc/perception/sensor.hpp"
#include "eacc/propagation.hpp"
#include "eacc/smpc/mpc.hpp"

namespace eacc::harness {

enum class LeadKind { file, random, step, constant };

struct LeadTrajectorySource {
  LeadKind kind = LeadKind::random;
  std::string path;       // kind == file
  int index = 0;          // trajectory within the file
  std::uint64_t seed = 1; // kind == random
  SyntheticLeadSpec random;
  double v_before = 15.0;  // step / constant
  double v_after = 25.0;
  double t_step = 20.0;
  double ramp_accel = 1.5;
};

struct ScenarioConfig {
  LeadTrajectorySource lead_trajectory;
  double initial_headway = 5.0;           // m
  double initial_speed_difference = 5.0;  // ego minus lead, m/s
  std::optional<double> v_s;              // empty: mean speed of the lead trace
  smpc::MpcConfig mpc;
  perception::SensorModel sensor;         // sensor observed at run time
  std::string ensemble;                   // manifest path
  double sim_rate = 100.0;                // Hz
  double replan_period = 0.5;             // s
  double estimate_spacing = 1.0;          // s, equals mpc.dt
  double duration = 60.0;                 // s
  bool ood = false;
  std::uint64_t seed = 0;
  VehicleGeometry lead_geometry{};
  VehicleGeometry ego_geometry{};
  // Seed the estimate buffer with an observation one spacing before t = 0,
  // taken under constant speeds, so the controller is live from the start.
  bool warm_start = true;
  // Advance the latest estimate to the replan instant using the known ego motion.
  bool compensate_estimate_age = true;
  std::string dump_qp_dir;

  void validate() const {
    mpc.validate();
    sensor.validate();
    detail::require(sim_rate > 0.0 && replan_period > 0.0 && estimate_spacing > 0.0,
                    "ScenarioConfig: rates and periods must be positive");
    detail::require(sim_rate >= 1.0 / replan_period, "ScenarioConfig: sim_rate below replan rate");
    detail::require(std::fabs(estimate_spacing - mpc.dt) <= 1e-9,
                    "ScenarioConfig: estimate_spacing must equal mpc.dt");
    detail::require(duration > 0.0, "ScenarioConfig: duration must be > 0");
    detail::require(initial_headway > 0.0, "ScenarioConfig: initial_headway must be > 0");
    auto is_multiple = [&](double period) {
      const double k = period * sim_rate;
      return std::fabs(k - std::round(k)) <= 1e-9 * std::max(1.0, k) && std::round(k) >= 1.0;
    };
    detail::require(is_multiple(replan_period) && is_multiple(estimate_spacing),
                    "ScenarioConfig: periods must be whole numbers of simulation frames");
  }
};

inline SpeedTrajectory resolve_lead(const LeadTrajectorySource& src, double duration) {
  switch (src.kind) {
    case LeadKind::file: {
      auto all = load_trajectories(src.path);
      if (src.index < 0 || src.index >= static_cast<int>(all.size()))
        throw DomainError("lead trajectory index " + std::to_string(src.index) + " out of range");
      return all[static_cast<std::size_t>(src.index)];
    }
    case LeadKind::random: {
      auto spec = src.random;
      spec.duration = std::max(spec.duration, duration);
      return synthetic_lead_trajectory(spec, src.seed);
    }
    case LeadKind::step:
      return step_lead_trajectory(src.v_before, src.v_after, src.t_step, src.ramp_accel, duration);
    case LeadKind::constant:
      return constant_lead_trajectory(src.v_before, duration);
  }
  throw DomainError("unknown lead trajectory kind");
}

struct ScenarioResult {
  std::vector<StepRecord> records;
  std::optional<MetricsReport> metrics;
  std::vector<std::string> events;
  std::optional<std::string> error;  // set when the loop aborted
  double v_s = 0.0;
  int solves = 0;
  int fallbacks = 0;
};

inline MetricsParams metrics_params(const ScenarioConfig& cfg, double v_s) {
  return {cfg.mpc.d_s, cfg.mpc.T_s, v_s, cfg.replan_period};
}

// Closed loop at sim_rate: the lead replays its speed trace, the ego integrates
// the held command. Every estimate_spacing a synthetic observation of the true
// headway is fused by the ensemble into the two-deep belief buffer; every
// replan_period the MPC runs on that buffer.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg_in,
                                   const std::vector<perception::RegressorParams>& ensemble,
                                   const SpeedTrajectory& lead_trace) {
  ScenarioResult res;
  ScenarioConfig cfg = cfg_in;
  try {
    detail::require(!ensemble.empty(), "run_scenario: empty ensemble");
    res.v_s = cfg.v_s ? *cfg.v_s : mean_speed(lead_trace);
    cfg.mpc.v_s = res.v_s;
    cfg.validate();
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }

  const auto& lim = cfg.mpc.limits;
  const double h = 1.0 / cfg.sim_rate;
  const auto frames = static_cast<long>(std::llround(cfg.duration * cfg.sim_rate));
  const auto replan_every = std::llround(cfg.replan_period * cfg.sim_rate);
  const auto estimate_every = std::llround(cfg.estimate_spacing * cfg.sim_rate);
  std::mt19937_64 rng(cfg.seed);

  struct Estimate {
    double t;
    perception::HeadwayEstimate e;
    VehicleState ego;
  };
  std::deque<Estimate> buffer;
  // Integral of ego acceleration weighted by time since the last estimate;
  // 2/dt^2 times this is the constant acceleration with the same effect on
  // the headway over the interval.
  double accel_moment = 0.0;
  double belief_a_prev = 0.0;

  VehicleState lead, ego;
  double a_cmd = 0.0;
  int plan_id = 0;
  std::vector<double> slacks(static_cast<std::size_t>(cfg.mpc.N), 0.0);
  long lead_clips = 0;

  auto observe = [&](double d) {
    return perception::ensemble_estimate(
        ensemble, perception::synth_observe(cfg.sensor, std::max(d, 1e-3), cfg.ood, rng));
  };

  try {
    const double v_lead0 = lead_speed_at(lead_trace, 0.0);
    const double v_ego0 = std::clamp(v_lead0 + cfg.initial_speed_difference, lim.v_min, lim.v_max);
    ego = {0.0, v_ego0};
    lead = {cfg.initial_headway + 0.5 * (cfg.lead_geometry.length + cfg.ego_geometry.length),
            v_lead0};
    if (cfg.warm_start) {
      const double d_hist = cfg.initial_headway - (v_lead0 - v_ego0) * cfg.estimate_spacing;
      buffer.push_back({-cfg.estimate_spacing, observe(d_hist),
                        {ego.x - v_ego0 * cfg.estimate_spacing, v_ego0}});
    }

    for (long k = 0; k <= frames; ++k) {
      const double t = static_cast<double>(k) * h;
      const double d_true = bumper_headway(lead, ego, cfg.lead_geometry, cfg.ego_geometry);

      if (k % estimate_every == 0) {
        buffer.push_back({t, observe(d_true), ego});
        while (buffer.size() > 2) buffer.pop_front();
        belief_a_prev = 2.0 * accel_moment / (cfg.estimate_spacing * cfg.estimate_spacing);
        accel_moment = 0.0;
      }

      if (k % replan_every == 0 && buffer.size() == 2) {
        const propagation::BeliefState belief{buffer[0].e.p, buffer[0].e.var, buffer[1].e.p,
                                              buffer[1].e.var, belief_a_prev, cfg.mpc.dt};
        auto rel = propagation::bootstrap_relative_speed(belief);
        double p0 = belief.p_now;
        double var0 = belief.var_now;
        const double age = t - buffer[1].t;
        if (cfg.compensate_estimate_age && age > 0.0) {
          // Lead held at constant speed, ego motion known exactly.
          const VehicleState& then = buffer[1].ego;
          p0 += rel.p_rel0 * age - ((ego.x - then.x) - then.v * age);
          rel.p_rel0 -= ego.v - then.v;
          var0 += age * age * rel.var_rel0;
        }
        auto sol = smpc::mpc_step_from(cfg.mpc, p0, var0, rel, ego.v, a_cmd);
        ++plan_id;
        ++res.solves;
        a_cmd = sol.command;
        slacks = sol.slacks;
        if (sol.fallback) {
          ++res.fallbacks;
          std::ostringstream os;
          os << "t=" << t << ": solver status " << smpc::to_string(sol.status)
             << ", braking fallback a=" << a_cmd;
          res.events.push_back(os.str());
        }
        if (!cfg.dump_qp_dir.empty()) {
          std::filesystem::create_directories(cfg.dump_qp_dir);
          std::ofstream dump(std::filesystem::path(cfg.dump_qp_dir) /
                             ("qp_" + std::to_string(plan_id) + ".txt"));
          smpc::write_qp_dump(dump, sol.problem.qp, &sol.qp_solution);
        }
      }

      StepRecord rec;
      rec.t = t;
      rec.lead = lead;
      rec.ego = ego;
      rec.d_true = d_true;
      rec.p_est = buffer.empty() ? 0.0 : buffer.back().e.p;
      rec.var_est = buffer.empty() ? 0.0 : buffer.back().e.var;
      rec.a_cmd = a_cmd;
      rec.plan_id = plan_id;
      rec.slacks = slacks;
      res.records.push_back(std::move(rec));
      if (k == frames) break;

      double a_lead = (lead_speed_at(lead_trace, t + h) - lead.v) / h;
      if (a_lead < lim.a_min || a_lead > lim.a_max) {
        ++lead_clips;
        a_lead = std::clamp(a_lead, lim.a_min, lim.a_max);
      }
      lead = step_kinematics(lead, {a_lead}, h, lim);
      const double v_before = ego.v;
      ego = step_kinematics(ego, {a_cmd}, h, lim);
      const double t_since = t - (buffer.empty() ? t : buffer.back().t);
      accel_moment += (ego.v - v_before) * (t_since + 0.5 * h);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }

  if (lead_clips > 0)
    res.events.push_back("lead acceleration clipped to [a_min, a_max] in " +
                         std::to_string(lead_clips) + " frames");
  if (!res.records.empty()) res.metrics = compute_metrics(res.records, metrics_params(cfg, res.v_s));
  return res;
}

}  // namespace eacc::harness
