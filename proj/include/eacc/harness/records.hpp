#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/kinematics.hpp"
#include "eacc/text.hpp"

namespace eacc::harness {

// One simulation frame.
struct StepRecord {
  double t = 0.0;
  VehicleState lead;
  VehicleState ego;
  double d_true = 0.0;
  double p_est = 0.0;
  double var_est = 0.0;
  double a_cmd = 0.0;
  int plan_id = 0;              // 0 until the first solve
  std::vector<double> slacks;   // of the most recent solve

  double delta_v() const { return lead.v - ego.v; }
};

inline void write_records_csv(std::ostream& os, const std::vector<StepRecord>& records, int horizon) {
  using text::format_double;
  os << "t,x_lead,v_lead,x_ego,v_ego,d_true,p_est,var_est,a_cmd";
  for (int i = 1; i <= horizon; ++i) os << ",delta" << i;
  os << '\n';
  for (const auto& r : records) {
    os << format_double(r.t) << ',' << format_double(r.lead.x) << ',' << format_double(r.lead.v)
       << ',' << format_double(r.ego.x) << ',' << format_double(r.ego.v) << ','
       << format_double(r.d_true) << ',' << format_double(r.p_est) << ','
       << format_double(r.var_est) << ',' << format_double(r.a_cmd);
    for (int i = 0; i < horizon; ++i)
      os << ',' << format_double(i < static_cast<int>(r.slacks.size()) ? r.slacks[static_cast<std::size_t>(i)] : 0.0);
    os << '\n';
  }
}

inline std::vector<StepRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("records CSV is empty");
  const auto header = text::split(text::trim(line));
  static const char* fixed[] = {"t", "x_lead", "v_lead", "x_ego", "v_ego",
                                "d_true", "p_est", "var_est", "a_cmd"};
  if (header.size() < 9) throw ParseError("records CSV header too short", 1);
  for (std::size_t i = 0; i < 9; ++i)
    if (text::trim(header[i]) != fixed[i])
      throw ParseError(std::string("records CSV: expected column '") + fixed[i] + "'", 1);
  for (std::size_t i = 9; i < header.size(); ++i)
    if (text::trim(header[i]) != "delta" + std::to_string(i - 8))
      throw ParseError("records CSV: expected column 'delta" + std::to_string(i - 8) + "'", 1);

  std::vector<StepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns", lineno);
    std::vector<double> v;
    for (auto c : cells) {
      auto x = text::parse_double(c);
      if (!x) throw ParseError("non-numeric cell '" + std::string(c) + "'", lineno);
      v.push_back(*x);
    }
    StepRecord r;
    r.t = v[0];
    r.lead = {v[1], v[2]};
    r.ego = {v[3], v[4]};
    r.d_true = v[5];
    r.p_est = v[6];
    r.var_est = v[7];
    r.a_cmd = v[8];
    r.slacks.assign(v.begin() + 9, v.end());
    if (!out.empty() && !(r.t > out.back().t))
      throw ParseError("records must be strictly ordered in t", lineno);
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ParseError("records CSV has no rows");
  return out;
}

inline std::vector<StepRecord> load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_records_csv(in);
}

}  // namespace eacc::harness
