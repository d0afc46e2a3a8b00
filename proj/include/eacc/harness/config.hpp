#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "eacc/errors.hpp"
#include "eacc/harness/scenario.hpp"
#include "eacc/text.hpp"

// Scenario files are YAML whose keys mirror ScenarioConfig field names.
// Omitted keys keep their defaults; unknown keys are rejected so typos
// do not silently fall back to defaults. Relative paths are resolved
// against the directory holding the file.

namespace eacc::harness {

namespace config_detail {

class Section {
 public:
  Section(const YAML::Node& node, std::string where) : node_(node), where_(std::move(where)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ParseError(where_ + ": expected a mapping", line());
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(where_ + "." + key + ": bad value", v.Mark().line + 1);
    }
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ParseError(where_ + ": unknown key '" + key + "'", kv.first.Mark().line + 1);
    }
  }

 private:
  int line() const { return node_.Mark().line + 1; }
  YAML::Node node_;
  std::string where_;
  std::set<std::string> seen_;
};

inline std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || std::filesystem::path(p).is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal().string();
}

inline LeadKind lead_kind(const std::string& s, int line) {
  if (s == "file") return LeadKind::file;
  if (s == "random") return LeadKind::random;
  if (s == "step") return LeadKind::step;
  if (s == "constant") return LeadKind::constant;
  throw ParseError("lead_trajectory.kind must be file, random, step or constant", line);
}

inline const char* lead_kind_name(LeadKind k) {
  switch (k) {
    case LeadKind::file: return "file";
    case LeadKind::random: return "random";
    case LeadKind::step: return "step";
    case LeadKind::constant: return "constant";
  }
  return "random";
}

}  // namespace config_detail

inline ScenarioConfig parse_scenario_config(const std::string& text,
                                            const std::filesystem::path& base_dir = {}) {
  using config_detail::Section;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1);
  }
  ScenarioConfig cfg;
  Section top(root, "scenario");

  {
    Section s(top.child("lead_trajectory"), top.path("lead_trajectory"));
    auto& lt = cfg.lead_trajectory;
    std::string kind = config_detail::lead_kind_name(lt.kind);
    s.get("kind", kind);
    lt.kind = config_detail::lead_kind(kind, root.Mark().line + 1);
    s.get("path", lt.path);
    lt.path = config_detail::resolve(lt.path, base_dir);
    s.get("index", lt.index);
    s.get("seed", lt.seed);
    s.get("v_before", lt.v_before);
    s.get("v_after", lt.v_after);
    s.get("t_step", lt.t_step);
    s.get("ramp_accel", lt.ramp_accel);
    Section r(s.child("random"), s.path("random"));
    auto& sp = lt.random;
    r.get("duration", sp.duration);
    r.get("dt_sample", sp.dt_sample);
    r.get("v_low", sp.v_low);
    r.get("v_high", sp.v_high);
    r.get("v_start_low", sp.v_start_low);
    r.get("v_start_high", sp.v_start_high);
    r.get("accel_max", sp.accel_max);
    r.get("jerk_max", sp.jerk_max);
    r.get("segment_min", sp.segment_min);
    r.get("segment_max", sp.segment_max);
    r.finish();
    s.finish();
  }

  top.get("initial_headway", cfg.initial_headway);
  top.get("initial_speed_difference", cfg.initial_speed_difference);
  if (auto v = top.child("v_s"); v && !v.IsNull()) {
    const auto raw = v.as<std::string>();
    if (raw != "auto-mean") {
      double x = 0.0;
      try {
        x = v.as<double>();
      } catch (const YAML::Exception&) {
        throw ParseError("scenario.v_s must be a number or auto-mean", v.Mark().line + 1);
      }
      cfg.v_s = x;
    }
  }

  {
    Section m(top.child("mpc"), top.path("mpc"));
    auto& c = cfg.mpc;
    m.get("N", c.N);
    m.get("dt", c.dt);
    m.get("d_s", c.d_s);
    m.get("T_s", c.T_s);
    m.get("r1", c.r1);
    m.get("r2", c.r2);
    m.get("q1", c.q1);
    m.get("q2", c.q2);
    m.get("rho", c.rho);
    m.get("eps", c.eps);
    m.get("v_s", c.v_s);
    m.get("allow_negative_margin", c.allow_negative_margin);
    m.get("fallback_jerk", c.fallback_jerk);
    Section l(m.child("limits"), m.path("limits"));
    l.get("v_min", c.limits.v_min);
    l.get("v_max", c.limits.v_max);
    l.get("a_min", c.limits.a_min);
    l.get("a_max", c.limits.a_max);
    l.finish();
    m.finish();
  }

  {
    Section s(top.child("sensor"), top.path("sensor"));
    auto& m = cfg.sensor;
    s.get("d_lo", m.d_lo);
    s.get("d_hi", m.d_hi);
    s.get("d_sat", m.d_sat);
    s.get("base_noise", m.base_noise);
    s.get("noise_growth", m.noise_growth);
    s.get("parallax", m.parallax);
    s.get("feature_gain", m.feature_gain);
    s.get("feature_bias", m.feature_bias);
    s.get("length_scales", m.length_scales);
    s.get("ood_shift", m.ood_shift);
    s.get("ood_scale", m.ood_scale);
    s.get("seed", m.seed);
    s.finish();
  }

  top.get("ensemble", cfg.ensemble);
  cfg.ensemble = config_detail::resolve(cfg.ensemble, base_dir);
  top.get("sim_rate", cfg.sim_rate);
  top.get("replan_period", cfg.replan_period);
  top.get("estimate_spacing", cfg.estimate_spacing);
  top.get("duration", cfg.duration);
  top.get("ood", cfg.ood);
  top.get("seed", cfg.seed);
  {
    Section g(top.child("lead_geometry"), top.path("lead_geometry"));
    g.get("length", cfg.lead_geometry.length);
    g.finish();
  }
  {
    Section g(top.child("ego_geometry"), top.path("ego_geometry"));
    g.get("length", cfg.ego_geometry.length);
    g.finish();
  }
  top.get("warm_start", cfg.warm_start);
  top.get("compensate_estimate_age", cfg.compensate_estimate_age);
  top.get("dump_qp_dir", cfg.dump_qp_dir);
  top.finish();
  return cfg;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str(), path.parent_path());
}

namespace config_detail {

// Shortest round-trip text, emitted as a plain scalar.
inline std::string num(double x) { return text::format_double(x); }

inline std::vector<std::string> nums(const std::vector<double>& xs) {
  std::vector<std::string> out;
  for (double x : xs) out.push_back(num(x));
  return out;
}

}  // namespace config_detail

inline std::string emit_scenario_config(const ScenarioConfig& cfg) {
  using config_detail::num;
  using config_detail::nums;
  YAML::Emitter e;
  e << YAML::BeginMap;
  const auto& lt = cfg.lead_trajectory;
  e << YAML::Key << "lead_trajectory" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << config_detail::lead_kind_name(lt.kind);
  e << YAML::Key << "path" << YAML::Value << lt.path;
  e << YAML::Key << "index" << YAML::Value << lt.index;
  e << YAML::Key << "seed" << YAML::Value << lt.seed;
  e << YAML::Key << "random" << YAML::Value << YAML::BeginMap;
  const auto& sp = lt.random;
  e << YAML::Key << "duration" << YAML::Value << num(sp.duration);
  e << YAML::Key << "dt_sample" << YAML::Value << num(sp.dt_sample);
  e << YAML::Key << "v_low" << YAML::Value << num(sp.v_low);
  e << YAML::Key << "v_high" << YAML::Value << num(sp.v_high);
  e << YAML::Key << "v_start_low" << YAML::Value << num(sp.v_start_low);
  e << YAML::Key << "v_start_high" << YAML::Value << num(sp.v_start_high);
  e << YAML::Key << "accel_max" << YAML::Value << num(sp.accel_max);
  e << YAML::Key << "jerk_max" << YAML::Value << num(sp.jerk_max);
  e << YAML::Key << "segment_min" << YAML::Value << num(sp.segment_min);
  e << YAML::Key << "segment_max" << YAML::Value << num(sp.segment_max);
  e << YAML::EndMap;
  e << YAML::Key << "v_before" << YAML::Value << num(lt.v_before);
  e << YAML::Key << "v_after" << YAML::Value << num(lt.v_after);
  e << YAML::Key << "t_step" << YAML::Value << num(lt.t_step);
  e << YAML::Key << "ramp_accel" << YAML::Value << num(lt.ramp_accel);
  e << YAML::EndMap;

  e << YAML::Key << "initial_headway" << YAML::Value << num(cfg.initial_headway);
  e << YAML::Key << "initial_speed_difference" << YAML::Value << num(cfg.initial_speed_difference);
  e << YAML::Key << "v_s" << YAML::Value;
  if (cfg.v_s)
    e << num(*cfg.v_s);
  else
    e << "auto-mean";

  const auto& c = cfg.mpc;
  e << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "N" << YAML::Value << c.N;
  e << YAML::Key << "dt" << YAML::Value << num(c.dt);
  e << YAML::Key << "d_s" << YAML::Value << num(c.d_s);
  e << YAML::Key << "T_s" << YAML::Value << num(c.T_s);
  e << YAML::Key << "r1" << YAML::Value << num(c.r1);
  e << YAML::Key << "r2" << YAML::Value << num(c.r2);
  e << YAML::Key << "q1" << YAML::Value << num(c.q1);
  e << YAML::Key << "q2" << YAML::Value << num(c.q2);
  e << YAML::Key << "rho" << YAML::Value << num(c.rho);
  e << YAML::Key << "eps" << YAML::Value << YAML::Flow << nums(c.eps);
  e << YAML::Key << "v_s" << YAML::Value << num(c.v_s);
  e << YAML::Key << "limits" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "v_min" << YAML::Value << num(c.limits.v_min);
  e << YAML::Key << "v_max" << YAML::Value << num(c.limits.v_max);
  e << YAML::Key << "a_min" << YAML::Value << num(c.limits.a_min);
  e << YAML::Key << "a_max" << YAML::Value << num(c.limits.a_max);
  e << YAML::EndMap;
  e << YAML::Key << "allow_negative_margin" << YAML::Value << c.allow_negative_margin;
  e << YAML::Key << "fallback_jerk" << YAML::Value << num(c.fallback_jerk);
  e << YAML::EndMap;

  const auto& m = cfg.sensor;
  e << YAML::Key << "sensor" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "d_lo" << YAML::Value << num(m.d_lo);
  e << YAML::Key << "d_hi" << YAML::Value << num(m.d_hi);
  e << YAML::Key << "d_sat" << YAML::Value << num(m.d_sat);
  e << YAML::Key << "base_noise" << YAML::Value << num(m.base_noise);
  e << YAML::Key << "noise_growth" << YAML::Value << num(m.noise_growth);
  e << YAML::Key << "parallax" << YAML::Value << num(m.parallax);
  e << YAML::Key << "feature_gain" << YAML::Value << num(m.feature_gain);
  e << YAML::Key << "feature_bias" << YAML::Value << num(m.feature_bias);
  e << YAML::Key << "length_scales" << YAML::Value << YAML::Flow << nums(m.length_scales);
  e << YAML::Key << "ood_shift" << YAML::Value << YAML::Flow << nums(m.ood_shift);
  e << YAML::Key << "ood_scale" << YAML::Value << num(m.ood_scale);
  e << YAML::Key << "seed" << YAML::Value << m.seed;
  e << YAML::EndMap;

  e << YAML::Key << "ensemble" << YAML::Value << cfg.ensemble;
  e << YAML::Key << "sim_rate" << YAML::Value << num(cfg.sim_rate);
  e << YAML::Key << "replan_period" << YAML::Value << num(cfg.replan_period);
  e << YAML::Key << "estimate_spacing" << YAML::Value << num(cfg.estimate_spacing);
  e << YAML::Key << "duration" << YAML::Value << num(cfg.duration);
  e << YAML::Key << "ood" << YAML::Value << cfg.ood;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "lead_geometry" << YAML::Value << YAML::BeginMap << YAML::Key << "length"
    << YAML::Value << num(cfg.lead_geometry.length) << YAML::EndMap;
  e << YAML::Key << "ego_geometry" << YAML::Value << YAML::BeginMap << YAML::Key << "length"
    << YAML::Value << num(cfg.ego_geometry.length) << YAML::EndMap;
  e << YAML::Key << "warm_start" << YAML::Value << cfg.warm_start;
  e << YAML::Key << "compensate_estimate_age" << YAML::Value << cfg.compensate_estimate_age;
  e << YAML::Key << "dump_qp_dir" << YAML::Value << cfg.dump_qp_dir;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace eacc::harness
