#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace eacc;
using namespace eacc::harness;
namespace fs = std::filesystem;

namespace {

StepRecord rec(double t, double d, double v_ego, double v_lead, double a = 0.0) {
  StepRecord r;
  r.t = t;
  r.d_true = d;
  r.ego = {0.0, v_ego};
  r.lead = {d, v_lead};
  r.a_cmd = a;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("eacc_test_" + name);
  fs::remove_all(p);
  return p;
}

ScenarioConfig constant_lead_config(double v_lead, double d0, double dv) {
  ScenarioConfig cfg;
  cfg.lead_trajectory.kind = LeadKind::constant;
  cfg.lead_trajectory.v_before = v_lead;
  cfg.initial_headway = d0;
  cfg.initial_speed_difference = dv;
  cfg.duration = 40.0;
  cfg.sensor.base_noise = 0.0;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Trajectories, TwoRowFile) {
  std::stringstream ss("t,v\n0,10\n1,12\n");
  const auto trs = read_trajectories(ss);
  ASSERT_EQ(trs.size(), 1u);
  EXPECT_EQ(trs[0].dt_sample, 1.0);
  EXPECT_EQ(trs[0].samples, (std::vector<double>{10, 12}));
}

TEST(Trajectories, SpeedLimitNamedInError) {
  std::stringstream ss("t,v\n0,10\n1,40\n");
  try {
    read_trajectories(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("34"), std::string::npos);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Trajectories, NonNumericCellHasLineNumber) {
  std::stringstream ss("t,v\n0,10\n1,fast\n2,11\n");
  try {
    read_trajectories(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Trajectories, OtherRejections) {
  std::stringstream empty("");
  EXPECT_THROW(read_trajectories(empty), ParseError);
  std::stringstream backwards("t,v\n0,10\n1,11\n0.5,12\n");
  EXPECT_THROW(read_trajectories(backwards), ParseError);
  std::stringstream uneven("t,v\n0,10\n1,11\n3,12\n");
  EXPECT_THROW(read_trajectories(uneven), ParseError);
}

TEST(Trajectories, MultiTraceRoundTrip) {
  const std::vector<SpeedTrajectory> trs{{0.5, {10, 11, 12}}, {0.5, {20, 19.25}}};
  std::stringstream ss;
  write_trajectories(ss, trs);
  const auto back = read_trajectories(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].samples, trs[0].samples);
  EXPECT_EQ(back[1].samples, trs[1].samples);
}

TEST(Filter, Examples) {
  const SpeedTrajectory flat{1, std::vector<double>(50, 15.0)};
  SpeedTrajectory zigzag{1, {}};
  for (int i = 0; i < 50; ++i) zigzag.samples.push_back(i % 2 ? 20 : 10);
  EXPECT_DOUBLE_EQ(speed_std(zigzag), 5.0);
  const auto kept = filter_trajectories({flat, zigzag}, 4.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].samples, zigzag.samples);
  EXPECT_EQ(filter_trajectories({flat, zigzag}, 0.0).size(), 2u);
}

TEST(SyntheticLead, StaysInBandAndIsSeeded) {
  SyntheticLeadSpec spec;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto tr = synthetic_lead_trajectory(spec, s);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      EXPECT_GE(tr.samples[i], spec.v_low);
      EXPECT_LE(tr.samples[i], spec.v_high);
      if (i > 0)
        EXPECT_LE(std::fabs(tr.samples[i] - tr.samples[i - 1]), spec.accel_max * spec.dt_sample + 1e-12);
    }
  }
  EXPECT_EQ(synthetic_lead_trajectory(spec, 4).samples, synthetic_lead_trajectory(spec, 4).samples);
}

TEST(Metrics, TimeToCollision) {
  EXPECT_DOUBLE_EQ(*time_to_collision(rec(0, 20, 25, 20)), 4.0);
  EXPECT_FALSE(time_to_collision(rec(0, 20, 20, 20)));
  EXPECT_DOUBLE_EQ(*time_to_collision(rec(0, 0, 25, 20)), 0.0);
}

TEST(Metrics, TimeToSafety) {
  EXPECT_EQ(time_to_safety({rec(0, 20, 20, 20)}, 15, 0).seconds, 0.0);
  const std::vector<StepRecord> rs{rec(3.0, 14, 20, 20), rec(3.2, 15.1, 20, 20), rec(3.4, 16, 20, 20)};
  EXPECT_DOUBLE_EQ(time_to_safety(rs, 15, 0).seconds, 3.2);
  const std::vector<StepRecord> never{rec(0, 5, 20, 20), rec(60, 6, 20, 20)};
  const auto t = time_to_safety(never, 15, 0);
  EXPECT_FALSE(t.reached);
  EXPECT_EQ(t.seconds, 60.0);
  // Constant time headway raises the bar with speed.
  EXPECT_FALSE(time_to_safety({rec(0, 20, 20, 20)}, 15, 1.0).reached);
}

TEST(Metrics, JerkSeries) {
  std::vector<StepRecord> flat;
  for (int k = 0; k < 300; ++k) flat.push_back(rec(k * 0.01, 20, 20, 20, 0.7));
  for (double j : jerk_series(flat, 0.5)) EXPECT_EQ(j, 0.0);

  std::vector<StepRecord> step;
  for (int k = 0; k < 100; ++k) step.push_back(rec(k * 0.01, 20, 20, 20, k < 50 ? 0.0 : 1.0));
  EXPECT_EQ(jerk_series(step, 0.5), (std::vector<double>{2.0}));

  EXPECT_TRUE(jerk_series({rec(0, 20, 20, 20, 1.0)}, 0.5).empty());
}

TEST(Records, CsvRoundTripAndHeader) {
  std::vector<StepRecord> rs;
  for (int k = 0; k < 5; ++k) {
    auto r = rec(k * 0.01, 10 + k / 3.0, 20.1, 19.7, -0.25 * k);
    r.p_est = 9.9;
    r.var_est = 0.123456789;
    r.slacks = {0.0, 1.0 / 7.0, 2.5};
    rs.push_back(r);
  }
  std::stringstream ss;
  write_records_csv(ss, rs, 3);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, "t,x_lead,v_lead,x_ego,v_ego,d_true,p_est,var_est,a_cmd,delta1,delta2,delta3");
  const auto back = read_records_csv(ss);
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(back[i].t, rs[i].t);
    EXPECT_EQ(back[i].d_true, rs[i].d_true);
    EXPECT_EQ(back[i].var_est, rs[i].var_est);
    EXPECT_EQ(back[i].a_cmd, rs[i].a_cmd);
    EXPECT_EQ(back[i].slacks, rs[i].slacks);
  }
}

TEST(Config, RoundTripAndStrictKeys) {
  ScenarioConfig cfg;
  cfg.initial_headway = 4.8;
  cfg.v_s = 17.25;
  cfg.mpc.eps = {0.1, 0.3, 0.45};
  cfg.sensor.ood_scale = 1.3;
  cfg.lead_trajectory.kind = LeadKind::step;
  cfg.seed = 77;
  const auto text = emit_scenario_config(cfg);
  const auto back = parse_scenario_config(text);
  EXPECT_EQ(emit_scenario_config(back), text);
  EXPECT_EQ(*back.v_s, 17.25);
  EXPECT_EQ(back.mpc.eps, cfg.mpc.eps);
  EXPECT_EQ(back.seed, 77u);

  try {
    parse_scenario_config("initial_headway: 5\nmpc:\n  N: 3\n  horizon: 4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon"), std::string::npos);
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_FALSE(parse_scenario_config("v_s: auto-mean\n").v_s.has_value());
}

TEST(Scenario, DeterministicForSameSeed) {
  const auto& ens = eacc::testing::trained_ensemble();
  ScenarioConfig cfg;
  cfg.duration = 15.0;
  cfg.seed = 3;
  const auto lead = resolve_lead(cfg.lead_trajectory, cfg.duration);
  const auto a = run_scenario(cfg, ens.members, lead);
  const auto b = run_scenario(cfg, ens.members, lead);
  ASSERT_FALSE(a.error);
  std::stringstream sa, sb;
  write_records_csv(sa, a.records, cfg.mpc.N);
  write_records_csv(sb, b.records, cfg.mpc.N);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(*a.metrics, *b.metrics);
  EXPECT_EQ(a.records.size(), 1501u);
}

TEST(Scenario, MetricsRecomputeFromRecords) {
  const auto& ens = eacc::testing::trained_ensemble();
  ScenarioConfig cfg;
  cfg.duration = 15.0;
  const auto res = run_scenario(cfg, ens.members, resolve_lead(cfg.lead_trajectory, cfg.duration));
  ASSERT_TRUE(res.metrics);
  std::stringstream ss;
  write_records_csv(ss, res.records, cfg.mpc.N);
  const auto again = compute_metrics(read_records_csv(ss), res.metrics->params);
  EXPECT_EQ(again, *res.metrics);
}

TEST(Scenario, RegulatesToSafeHeadwayBehindConstantLead) {
  const auto& ens = eacc::testing::trained_ensemble();
  auto cfg = constant_lead_config(20.0, 5.0, 5.0);
  const auto res = run_scenario(cfg, ens.members, resolve_lead(cfg.lead_trajectory, cfg.duration));
  ASSERT_FALSE(res.error) << *res.error;
  EXPECT_FALSE(res.metrics->collision);
  EXPECT_TRUE(res.metrics->time_to_safety.reached);
  // Once regulated, the gap holds near d_s and the ego matches the lead.
  const auto& last = res.records.back();
  EXPECT_GT(last.d_true, cfg.mpc.d_s - 2.0);
  EXPECT_NEAR(last.ego.v, 20.0, 0.5);
}

TEST(Scenario, TracksSetSpeedWhenLeadIsFar) {
  const auto& ens = eacc::testing::trained_ensemble();
  auto cfg = constant_lead_config(20.0, 60.0, 0.0);
  cfg.v_s = 20.0;
  const auto res = run_scenario(cfg, ens.members, resolve_lead(cfg.lead_trajectory, cfg.duration));
  ASSERT_FALSE(res.error) << *res.error;
  for (const auto& r : res.records)
    if (r.t >= 10.0) EXPECT_NEAR(r.ego.v, 20.0, 0.1) << "t=" << r.t;
}

TEST(Scenario, SwitchesBackToSpeedTrackingWhenLeadPullsAway) {
  const auto& ens = eacc::testing::trained_ensemble();
  ScenarioConfig cfg = constant_lead_config(15.0, 20.0, 0.0);
  cfg.lead_trajectory.kind = LeadKind::step;
  cfg.lead_trajectory.v_after = 25.0;
  cfg.lead_trajectory.t_step = 15.0;
  cfg.v_s = 20.0;
  cfg.duration = 50.0;
  const auto res = run_scenario(cfg, ens.members, resolve_lead(cfg.lead_trajectory, cfg.duration));
  ASSERT_FALSE(res.error) << *res.error;
  EXPECT_FALSE(res.metrics->collision);
  // Following a slower lead first, then cruising at v_s once it is gone.
  for (const auto& r : res.records) {
    if (r.t > 10.0 && r.t < 15.0) EXPECT_LT(r.ego.v, 17.0);
    if (r.t > 40.0) EXPECT_LT(std::fabs(r.ego.v - 20.0), 0.2) << "t=" << r.t;
  }
}

TEST(Scenario, BadConfigReportedNotThrown) {
  const auto& ens = eacc::testing::trained_ensemble();
  ScenarioConfig cfg;
  cfg.replan_period = 0.333;
  const auto res = run_scenario(cfg, ens.members, constant_lead_trajectory(20, 10));
  EXPECT_TRUE(res.error);
  EXPECT_TRUE(res.records.empty());
}

TEST(Batch, RowsPerTrajectoryAndEmptyFilterError) {
  const auto& ens = eacc::testing::trained_ensemble();
  ScenarioConfig cfg;
  cfg.duration = 8.0;
  SpeedTrajectory zig{0.5, {}};
  for (int i = 0; i < 40; ++i) zig.samples.push_back(i % 4 < 2 ? 10.0 : 20.0);
  const auto dir = scratch("batch");
  const auto summary = batch_run(cfg, {zig, zig, constant_lead_trajectory(15, 8)}, ens.members, dir);
  ASSERT_EQ(summary.rows.size(), 2u);
  ASSERT_TRUE(summary.rows[0].metrics && summary.rows[1].metrics);
  EXPECT_EQ(*summary.rows[0].metrics, *summary.rows[1].metrics);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "scenario_001" / "records.csv"));
  EXPECT_TRUE(fs::exists(dir / "hist_jerk.csv"));

  try {
    batch_run(cfg, {constant_lead_trajectory(15, 8)}, ens.members, dir, 4.0);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos);
  }
  fs::remove_all(dir);
}
