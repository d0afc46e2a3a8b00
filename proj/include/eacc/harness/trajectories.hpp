#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/kinematics.hpp"
#include "eacc/text.hpp"

namespace eacc::harness {

inline constexpr double kDatasetSpeedLimit = 34.0;  // m/s

// Lead speed traces in CSV. Either a single trace with header `t,v`, or
// several traces with header `id,t,v`, grouped by id in order of first
// appearance. Times must increase strictly with a uniform step.
inline std::vector<SpeedTrajectory> read_trajectories(std::istream& is,
                                                      double v_max = kDatasetSpeedLimit) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("trajectory file is empty");
  const auto header = text::split(text::trim(line));
  bool with_id = false;
  if (header.size() == 2 && text::trim(header[0]) == "t" && text::trim(header[1]) == "v")
    with_id = false;
  else if (header.size() == 3 && text::trim(header[0]) == "id" && text::trim(header[1]) == "t" &&
           text::trim(header[2]) == "v")
    with_id = true;
  else
    throw ParseError("trajectory header must be 't,v' or 'id,t,v'", 1);

  struct Raw {
    std::vector<double> t, v;
    std::vector<std::size_t> lines;
  };
  std::vector<std::string> order;
  std::map<std::string, Raw> groups;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns", lineno);
    const std::string id = with_id ? std::string(text::trim(cells[0])) : "";
    const auto t = text::parse_double(cells[with_id ? 1 : 0]);
    const auto v = text::parse_double(cells[with_id ? 2 : 1]);
    if (!t || !v) throw ParseError("non-numeric cell", lineno);
    if (!std::isfinite(*t) || !std::isfinite(*v)) throw ParseError("non-finite value", lineno);
    if (*v < 0.0 || *v > v_max) {
      std::ostringstream os;
      os << "speed " << *v << " m/s outside [0, " << v_max << "] m/s";
      throw ParseError(os.str(), lineno);
    }
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    auto& g = it->second;
    if (!g.t.empty() && !(*t > g.t.back()))
      throw ParseError("time must increase strictly within a trajectory", lineno);
    g.t.push_back(*t);
    g.v.push_back(*v);
    g.lines.push_back(lineno);
  }
  if (groups.empty()) throw ParseError("trajectory file has no data rows");

  std::vector<SpeedTrajectory> out;
  for (const auto& id : order) {
    const auto& g = groups.at(id);
    if (g.t.size() < 2)
      throw ParseError("trajectory '" + id + "' needs at least 2 samples", g.lines.front());
    const double dt = g.t[1] - g.t[0];
    for (std::size_t i = 1; i < g.t.size(); ++i)
      if (std::fabs((g.t[i] - g.t[i - 1]) - dt) > 1e-6 * std::max(1.0, dt))
        throw ParseError("non-uniform sampling step", g.lines[i]);
    out.push_back({dt, g.v});
  }
  return out;
}

inline std::vector<SpeedTrajectory> load_trajectories(const std::string& path,
                                                      double v_max = kDatasetSpeedLimit) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file " + path);
  return read_trajectories(in, v_max);
}

inline void write_trajectories(std::ostream& os, const std::vector<SpeedTrajectory>& trajs) {
  const bool with_id = trajs.size() != 1;
  os << (with_id ? "id,t,v\n" : "t,v\n");
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& tr = trajs[k];
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      if (with_id) os << k << ',';
      os << text::format_double(tr.dt_sample * static_cast<double>(i)) << ','
         << text::format_double(tr.samples[i]) << '\n';
    }
  }
}

inline double mean_speed(const SpeedTrajectory& tr) {
  detail::require(!tr.samples.empty(), "mean_speed: empty trajectory");
  return std::accumulate(tr.samples.begin(), tr.samples.end(), 0.0) /
         static_cast<double>(tr.samples.size());
}

// Population standard deviation.
inline double speed_std(const SpeedTrajectory& tr) {
  const double mu = mean_speed(tr);
  double sq = 0.0;
  for (double v : tr.samples) sq += (v - mu) * (v - mu);
  return std::sqrt(sq / static_cast<double>(tr.samples.size()));
}

inline std::vector<SpeedTrajectory> filter_trajectories(const std::vector<SpeedTrajectory>& trajs,
                                                        double min_std = 4.0) {
  std::vector<SpeedTrajectory> out;
  for (const auto& tr : trajs)
    if (min_std <= 0.0 || speed_std(tr) > min_std) out.push_back(tr);
  return out;
}

// Random lead behaviour: acceleration targets of random sign, size and
// duration; the realized acceleration slews toward the target at jerk_max and
// turns back before the speed band edges.
struct SyntheticLeadSpec {
  double duration = 60.0;
  double dt_sample = 0.04;
  double v_low = 6.0;
  double v_high = 26.0;
  double v_start_low = 12.0;
  double v_start_high = 24.0;
  double accel_max = 1.0;
  double segment_min = 2.0;
  double segment_max = 6.0;
  double jerk_max = 0.5;  // acceleration slews toward each segment's target
};

inline SpeedTrajectory synthetic_lead_trajectory(const SyntheticLeadSpec& spec, std::uint64_t seed) {
  detail::require(spec.duration > 0.0 && spec.dt_sample > 0.0, "synthetic lead: bad timing");
  detail::require(spec.v_low < spec.v_high, "synthetic lead: empty speed band");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(spec.v_start_low, spec.v_start_high);
  std::uniform_real_distribution<double> accel(-spec.accel_max, spec.accel_max);
  std::uniform_real_distribution<double> seg(spec.segment_min, spec.segment_max);

  const auto n = static_cast<std::size_t>(std::llround(spec.duration / spec.dt_sample)) + 1;
  SpeedTrajectory tr{spec.dt_sample, {}};
  tr.samples.reserve(n);
  double v = std::clamp(start(rng), spec.v_low, spec.v_high);
  double target = accel(rng);
  double a = 0.0;
  double seg_left = seg(rng);
  const double slew = spec.jerk_max * spec.dt_sample;
  for (std::size_t i = 0; i < n; ++i) {
    tr.samples.push_back(v);
    if (seg_left <= 0.0) {
      target = accel(rng);
      seg_left = seg(rng);
    }
    // Turn around early enough to stop accelerating before the band edge.
    const double brake_span = a * a / (2.0 * spec.jerk_max) + std::fabs(a) * spec.dt_sample;
    if ((a > 0.0 && v + brake_span >= spec.v_high) || (a < 0.0 && v - brake_span <= spec.v_low))
      target = -std::fabs(target) * (a > 0.0 ? 1.0 : -1.0);
    a += std::clamp(target - a, -slew, slew);
    v = std::clamp(v + a * spec.dt_sample, spec.v_low, spec.v_high);
    seg_left -= spec.dt_sample;
  }
  return tr;
}

// Lead holding v_before, then ramping at `ramp_accel` to v_after from t_step.
inline SpeedTrajectory step_lead_trajectory(double v_before, double v_after, double t_step,
                                            double ramp_accel, double duration,
                                            double dt_sample = 0.04) {
  detail::require(ramp_accel > 0.0 && duration > 0.0 && dt_sample > 0.0,
                  "step lead: bad parameters");
  const auto n = static_cast<std::size_t>(std::llround(duration / dt_sample)) + 1;
  SpeedTrajectory tr{dt_sample, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = dt_sample * static_cast<double>(i);
    double v = v_before;
    if (t > t_step) {
      const double dv = ramp_accel * (t - t_step);
      v = v_after > v_before ? std::min(v_after, v_before + dv) : std::max(v_after, v_before - dv);
    }
    tr.samples.push_back(v);
  }
  return tr;
}

inline SpeedTrajectory constant_lead_trajectory(double v, double duration, double dt_sample = 0.04) {
  return step_lead_trajectory(v, v, duration, 1.0, duration, dt_sample);
}

}  // namespace eacc::harness
