#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/harness/metrics.hpp"
#include "eacc/harness/records.hpp"
#include "eacc/harness/scenario.hpp"
#include "eacc/harness/trajectories.hpp"
#include "eacc/text.hpp"

namespace eacc::harness {

struct BatchRow {
  std::size_t index = 0;
  double v_s = 0.0;
  double speed_std = 0.0;
  std::optional<MetricsReport> metrics;
  std::optional<std::string> error;
};

struct BatchSummary {
  std::vector<BatchRow> rows;
  Histogram toc_hist = toc_histogram();
  Histogram time_to_safety_hist = time_to_safety_histogram();
  Histogram accel_hist = accel_histogram();
  Histogram jerk_hist = jerk_histogram();
  int failures = 0;
};

inline std::string scenario_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenario_%03zu", i);
  return buf;
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  using text::format_double;
  os << "bin_lo,bin_hi,count\n";
  const std::size_t bins = h.counts.size() - 2;
  os << "-inf," << format_double(h.lo) << ',' << h.counts.front() << '\n';
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = h.lo + h.width * static_cast<double>(b);
    os << format_double(lo) << ',' << format_double(lo + h.width) << ',' << h.counts[b + 1] << '\n';
  }
  os << format_double(h.lo + h.width * static_cast<double>(bins)) << ",inf," << h.counts.back()
     << '\n';
}

inline void write_summary_csv(std::ostream& os, const BatchSummary& s) {
  using text::format_double;
  os << "scenario,status,v_s,lead_speed_std,min_toc,time_to_safety,time_to_safety_reached,"
        "max_abs_jerk,min_headway,speed_rms_error,mean_ego_speed,collision,error\n";
  for (const auto& r : s.rows) {
    os << r.index << ',' << (r.error ? "error" : "ok") << ',' << format_double(r.v_s) << ','
       << format_double(r.speed_std) << ',';
    if (r.metrics) {
      const auto& m = *r.metrics;
      os << (m.min_toc ? format_double(*m.min_toc) : "") << ','
         << format_double(m.time_to_safety.seconds) << ',' << (m.time_to_safety.reached ? 1 : 0)
         << ',' << format_double(m.max_abs_jerk) << ',' << format_double(m.min_headway) << ','
         << format_double(m.speed_rms_error) << ',' << format_double(m.mean_ego_speed) << ','
         << (m.collision ? 1 : 0) << ',';
    } else {
      os << ",,,,,,,,";
    }
    std::string err = r.error.value_or("");
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    os << err << '\n';
  }
}

// One scenario per trajectory that survives the std filter, each with v_s set
// to that trajectory's mean speed and the template's seed. A failing scenario
// is recorded in its row and the batch moves on.
inline BatchSummary batch_run(const ScenarioConfig& templ,
                              const std::vector<SpeedTrajectory>& trajectories,
                              const std::vector<perception::RegressorParams>& ensemble,
                              const std::filesystem::path& out_dir, double min_std = 4.0) {
  const auto kept = filter_trajectories(trajectories, min_std);
  if (kept.empty())
    throw DomainError("no trajectory has speed std above " + text::format_double(min_std) +
                      " m/s (" + std::to_string(trajectories.size()) + " before filtering)");
  std::filesystem::create_directories(out_dir);

  BatchSummary summary;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& tr = kept[i];
    ScenarioConfig cfg = templ;
    cfg.v_s = mean_speed(tr);
    const auto dir = out_dir / scenario_dir_name(i);
    std::filesystem::create_directories(dir);
    if (!templ.dump_qp_dir.empty()) cfg.dump_qp_dir = (dir / templ.dump_qp_dir).string();

    BatchRow row;
    row.index = i;
    row.v_s = *cfg.v_s;
    row.speed_std = speed_std(tr);
    auto res = run_scenario(cfg, ensemble, tr);
    row.error = res.error;
    row.metrics = res.metrics;
    {
      std::ofstream rec(dir / "records.csv");
      write_records_csv(rec, res.records, cfg.mpc.N);
    }
    if (res.metrics) {
      std::ofstream mj(dir / "metrics.json");
      mj << metrics_json(*res.metrics).dump(2) << '\n';
      summary.toc_hist.merge(res.metrics->toc_hist);
      summary.accel_hist.merge(res.metrics->accel_hist);
      summary.jerk_hist.merge(res.metrics->jerk_hist);
      summary.time_to_safety_hist.add(res.metrics->time_to_safety.seconds);
    }
    if (!res.events.empty() || res.error) {
      std::ofstream ev(dir / "events.log");
      for (const auto& e : res.events) ev << e << '\n';
      if (res.error) ev << "error: " << *res.error << '\n';
    }
    if (row.error) ++summary.failures;
    summary.rows.push_back(std::move(row));
  }

  {
    std::ofstream s(out_dir / "summary.csv");
    write_summary_csv(s, summary);
  }
  const std::pair<const char*, const Histogram*> panels[] = {
      {"hist_toc.csv", &summary.toc_hist},
      {"hist_time_to_safety.csv", &summary.time_to_safety_hist},
      {"hist_accel.csv", &summary.accel_hist},
      {"hist_jerk.csv", &summary.jerk_hist}};
  for (const auto& [name, h] : panels) {
    std::ofstream f(out_dir / name);
    write_histogram_csv(f, *h);
  }
  return summary;
}

}  // namespace eacc::harness
