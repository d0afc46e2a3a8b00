#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "json.hpp"

#include "eacc/errors.hpp"
#include "eacc/harness/records.hpp"

namespace eacc::harness {

// Gap over closing speed; none when the ego is not faster than the lead.
inline std::optional<double> time_to_collision(const StepRecord& r) {
  const double closing = r.ego.v - r.lead.v;
  if (!(closing > 0.0)) return std::nullopt;
  return std::max(r.d_true, 0.0) / closing;
}

struct TimeToSafety {
  double seconds = 0.0;
  bool reached = false;

  friend bool operator==(const TimeToSafety&, const TimeToSafety&) = default;
};

// First t with d_true >= d_s + T_s v_ego; the last record's t when never.
inline TimeToSafety time_to_safety(const std::vector<StepRecord>& records, double d_s, double T_s) {
  detail::require(!records.empty(), "time_to_safety: no records");
  for (const auto& r : records)
    if (r.d_true >= d_s + T_s * r.ego.v) return {r.t, true};
  return {records.back().t, false};
}

// Commands are held for a replan period; the command in force at the start of
// each period is differenced against the previous period's.
inline std::vector<double> jerk_series(const std::vector<StepRecord>& records, double replan_period) {
  detail::require(replan_period > 0.0, "jerk_series: replan period must be > 0");
  std::vector<double> commands;
  long last_slot = std::numeric_limits<long>::min();
  for (const auto& r : records) {
    const auto slot = static_cast<long>(std::floor(r.t / replan_period + 1e-6));
    if (slot != last_slot) {
      commands.push_back(r.a_cmd);
      last_slot = slot;
    }
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < commands.size(); ++i)
    out.push_back((commands[i] - commands[i - 1]) / replan_period);
  return out;
}

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<long> counts;  // counts[0] underflow, counts.back() overflow
  long total = 0;

  static Histogram make(double lo, double hi, int bins) {
    return {lo, (hi - lo) / bins, std::vector<long>(static_cast<std::size_t>(bins) + 2, 0), 0};
  }

  void add(double x) {
    ++total;
    const double pos = (x - lo) / width;
    const auto bins = static_cast<long>(counts.size()) - 2;
    if (pos < 0.0)
      ++counts.front();
    else if (pos >= static_cast<double>(bins))
      ++counts.back();
    else
      ++counts[static_cast<std::size_t>(pos) + 1];
  }

  void merge(const Histogram& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total += other.total;
  }

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

inline Histogram toc_histogram() { return Histogram::make(0.0, 20.0, 40); }
inline Histogram jerk_histogram() { return Histogram::make(-5.0, 5.0, 40); }
inline Histogram accel_histogram() { return Histogram::make(-6.0, 6.0, 48); }
inline Histogram time_to_safety_histogram() { return Histogram::make(0.0, 10.0, 20); }

struct MetricsParams {
  double d_s = 15.0;
  double T_s = 0.0;
  double v_s = 20.0;
  double replan_period = 0.5;

  friend bool operator==(const MetricsParams&, const MetricsParams&) = default;
};

struct MetricsReport {
  std::optional<double> min_toc;  // none when the ego never closes in
  TimeToSafety time_to_safety;
  double max_abs_jerk = 0.0;
  double min_headway = 0.0;
  double speed_rms_error = 0.0;
  double mean_ego_speed = 0.0;
  bool collision = false;
  Histogram toc_hist = toc_histogram();
  Histogram jerk_hist = jerk_histogram();
  Histogram accel_hist = accel_histogram();
  MetricsParams params;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport compute_metrics(const std::vector<StepRecord>& records, const MetricsParams& mp) {
  detail::require(!records.empty(), "compute_metrics: no records");
  MetricsReport m;
  m.params = mp;
  m.min_headway = std::numeric_limits<double>::infinity();
  double sq = 0.0, speed = 0.0;
  for (const auto& r : records) {
    if (auto toc = time_to_collision(r)) {
      m.toc_hist.add(*toc);
      m.min_toc = m.min_toc ? std::min(*m.min_toc, *toc) : *toc;
    }
    m.accel_hist.add(r.a_cmd);
    m.min_headway = std::min(m.min_headway, r.d_true);
    sq += (r.ego.v - mp.v_s) * (r.ego.v - mp.v_s);
    speed += r.ego.v;
  }
  const double n = static_cast<double>(records.size());
  m.speed_rms_error = std::sqrt(sq / n);
  m.mean_ego_speed = speed / n;
  m.collision = m.min_headway <= 0.0;
  m.time_to_safety = time_to_safety(records, mp.d_s, mp.T_s);
  for (double j : jerk_series(records, mp.replan_period)) {
    m.jerk_hist.add(j);
    m.max_abs_jerk = std::max(m.max_abs_jerk, std::fabs(j));
  }
  return m;
}

inline nlohmann::ordered_json histogram_json(const Histogram& h) {
  return {{"lo", h.lo}, {"width", h.width}, {"counts", h.counts}, {"total", h.total}};
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["min_toc"] = m.min_toc ? nlohmann::ordered_json(*m.min_toc) : nlohmann::ordered_json(nullptr);
  j["time_to_safety"] = m.time_to_safety.seconds;
  j["time_to_safety_reached"] = m.time_to_safety.reached;
  j["max_abs_jerk"] = m.max_abs_jerk;
  j["min_headway"] = m.min_headway;
  j["speed_rms_error"] = m.speed_rms_error;
  j["mean_ego_speed"] = m.mean_ego_speed;
  j["collision"] = m.collision;
  j["toc_histogram"] = histogram_json(m.toc_hist);
  j["jerk_histogram"] = histogram_json(m.jerk_hist);
  j["accel_histogram"] = histogram_json(m.accel_hist);
  j["params"] = {{"d_s", m.params.d_s},
                 {"T_s", m.params.T_s},
                 {"v_s", m.params.v_s},
                 {"replan_period", m.params.replan_period}};
  return j;
}

inline MetricsParams metrics_params_from_json(const nlohmann::json& j) {
  const auto& p = j.at("params");
  return {p.at("d_s").get<double>(), p.at("T_s").get<double>(), p.at("v_s").get<double>(),
          p.at("replan_period").get<double>()};
}

}  // namespace eacc::harness
