// Command-line front end: data generation, ensemble training and evaluation,
// closed-loop simulation, batches and metric recomputation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eacc/eacc.hpp"

namespace fs = std::filesystem;
using namespace eacc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool ood = false;
  std::string dump_qp;
  bool allow_negative_margin = false;
  std::string ensemble;
};

harness::ScenarioConfig scenario_from(const Common& c) {
  harness::ScenarioConfig cfg;
  if (!c.config.empty()) cfg = harness::load_scenario_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.ood) cfg.ood = true;
  if (!c.dump_qp.empty()) cfg.dump_qp_dir = c.dump_qp;
  if (c.allow_negative_margin) cfg.mpc.allow_negative_margin = true;
  if (!c.ensemble.empty()) cfg.ensemble = c.ensemble;
  return cfg;
}

perception::Ensemble ensemble_for(const harness::ScenarioConfig& cfg) {
  if (cfg.ensemble.empty())
    throw DomainError("no ensemble given (set `ensemble` in the config or pass --ensemble)");
  return perception::load_ensemble(cfg.ensemble);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw DomainError("cannot write " + p.string());
  return f;
}

void write_scenario_outputs(const fs::path& dir, const harness::ScenarioResult& res, int horizon) {
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "records.csv");
    harness::write_records_csv(f, res.records, horizon);
  }
  if (res.metrics) {
    auto f = open_out(dir / "metrics.json");
    f << harness::metrics_json(*res.metrics).dump(2) << '\n';
  }
  auto f = open_out(dir / "events.log");
  for (const auto& e : res.events) f << e << '\n';
  if (res.error) f << "error: " << *res.error << '\n';
}

void add_common(CLI::App* app, Common& c, bool sim_flags) {
  app->add_option("--config", c.config, "Scenario YAML file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Random seed");
  app->add_flag("--ood", c.ood, "Apply the out-of-distribution observation transform");
  if (sim_flags) {
    app->add_option("--dump-qp", c.dump_qp, "Directory receiving one QP dump per solve");
    app->add_flag("--allow-negative-margin", c.allow_negative_margin,
                  "Use risk levels above 0.5 verbatim (negative tightening margins)");
    app->add_option("--ensemble", c.ensemble, "Ensemble manifest (overrides the config)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware adaptive cruise control toolkit"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, sim_c, batch_c;

  auto* gen = app.add_subcommand("gen-data", "Synthesize a labelled observation set");
  gen->footer("--ood writes transformed observations (for analysis, not training).");
  std::size_t gen_count = 4000;
  std::string gen_out;
  add_common(gen, gen_c, false);
  gen->add_option("--count", gen_count, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("-o,--out", gen_out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a deep ensemble");
  std::string train_data, train_out;
  int train_members = 6, train_epochs = 100;
  add_common(train, train_c, false);
  train->add_option("--data", train_data, "Training CSV from gen-data")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("-o,--out", train_out, "Ensemble manifest to write")->required();
  train->add_option("-n,--members", train_members, "Ensemble size")->check(CLI::Range(2, 1000));
  train->add_option("--epochs", train_epochs, "Epochs per member")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval-ensemble", "Per-member and fused estimates over a sweep");
  std::string eval_out;
  double eval_lo = 2.0, eval_hi = 25.0, eval_step = 0.5;
  add_common(eval, eval_c, false);
  eval->add_option("--ensemble", eval_c.ensemble, "Ensemble manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--from", eval_lo, "First headway, m");
  eval->add_option("--to", eval_hi, "Last headway, m");
  eval->add_option("--step", eval_step, "Headway step, m")->check(CLI::PositiveNumber);
  eval->add_option("-o,--out", eval_out, "Output CSV")->required();

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop scenario");
  std::string sim_out;
  add_common(sim, sim_c, true);
  sim->add_option("-o,--out", sim_out, "Output directory")->required();

  auto* batch = app.add_subcommand("batch", "Run one scenario per lead trajectory");
  std::string batch_out, batch_traj;
  int batch_random = 0;
  double batch_min_std = 4.0;
  add_common(batch, batch_c, true);
  batch->add_option("--trajectories", batch_traj, "Lead speed CSV (t,v or id,t,v)")
      ->check(CLI::ExistingFile);
  batch->add_option("--random", batch_random,
                    "Use synthetic leads until this many pass the filter");
  batch->add_option("--min-std", batch_min_std, "Speed std filter, m/s");
  batch->add_option("-o,--out", batch_out, "Output directory")->required();

  auto* met = app.add_subcommand("metrics", "Recompute a metrics report from records");
  std::string met_records, met_params, met_out;
  harness::MetricsParams met_mp;
  met->add_option("--records", met_records, "records.csv")->required()->check(CLI::ExistingFile);
  met->add_option("--params", met_params, "metrics.json whose params block to reuse")
      ->check(CLI::ExistingFile);
  met->add_option("--d-s", met_mp.d_s, "Stopping distance, m");
  met->add_option("--t-s", met_mp.T_s, "Time headway, s");
  met->add_option("--v-s", met_mp.v_s, "Set speed, m/s");
  met->add_option("--replan", met_mp.replan_period, "Replan period, s");
  met->add_option("-o,--out", met_out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      auto cfg = scenario_from(gen_c);
      auto data = perception::generate_training_set(cfg.sensor, gen_count,
                                                    gen_c.seed.value_or(cfg.sensor.seed));
      if (gen_c.ood)
        for (auto& item : data) item.obs = perception::apply_ood(cfg.sensor, item.obs);
      auto f = open_out(gen_out);
      perception::write_training_csv(f, data);
      return 0;
    }

    if (*train) {
      auto cfg = scenario_from(train_c);
      const auto data = perception::load_training_csv(train_data);
      perception::EnsembleDiversity div;
      const std::uint64_t offset = train_c.seed.value_or(0);
      for (auto& s : div.seeds) s += offset;
      perception::TrainingHyper hyper;
      hyper.epochs = train_epochs;
      perception::Ensemble ens;
      ens.sensor = cfg.sensor;
      ens.members = perception::build_ensemble(data, train_members, div, hyper,
                                               {cfg.sensor.d_lo, cfg.sensor.d_hi});
      perception::save_ensemble(train_out, ens);
      return 0;
    }

    if (*eval) {
      auto cfg = scenario_from(eval_c);
      const auto ens = ensemble_for(cfg);
      if (eval_hi < eval_lo) throw DomainError("--to must not be below --from");
      std::mt19937_64 rng(eval_c.seed.value_or(cfg.seed));
      auto f = open_out(eval_out);
      f << "d,p,var";
      for (std::size_t i = 0; i < ens.members.size(); ++i) f << ",p" << i << ",var" << i;
      f << '\n';
      const auto steps = static_cast<long>(std::floor((eval_hi - eval_lo) / eval_step + 1e-9));
      for (long k = 0; k <= steps; ++k) {
        const double d = eval_lo + eval_step * static_cast<double>(k);
        const auto obs = perception::synth_observe(ens.sensor, d, eval_c.ood, rng);
        const auto parts = perception::member_estimates(ens.members, obs);
        const auto fused = perception::fuse_estimates(parts);
        f << text::format_double(d) << ',' << text::format_double(fused.p) << ','
          << text::format_double(fused.var);
        for (const auto& e : parts)
          f << ',' << text::format_double(e.p) << ',' << text::format_double(e.var);
        f << '\n';
      }
      return 0;
    }

    if (*sim) {
      auto cfg = scenario_from(sim_c);
      const auto ens = ensemble_for(cfg);
      const auto lead = harness::resolve_lead(cfg.lead_trajectory, cfg.duration);
      const auto res = harness::run_scenario(cfg, ens.members, lead);
      write_scenario_outputs(sim_out, res, cfg.mpc.N);
      if (res.error) {
        std::cerr << "error: " << *res.error << '\n';
        return 1;
      }
      return 0;
    }

    if (*batch) {
      auto cfg = scenario_from(batch_c);
      const auto ens = ensemble_for(cfg);
      std::vector<SpeedTrajectory> trajs;
      if (!batch_traj.empty()) {
        trajs = harness::load_trajectories(batch_traj);
      } else if (batch_random > 0) {
        // Draw synthetic leads from consecutive seeds until enough pass the filter.
        auto spec = cfg.lead_trajectory.random;
        spec.duration = std::max(spec.duration, cfg.duration);
        for (std::uint64_t s = cfg.lead_trajectory.seed;
             static_cast<int>(harness::filter_trajectories(trajs, batch_min_std).size()) < batch_random;
             ++s) {
          if (s - cfg.lead_trajectory.seed > 100000)
            throw DomainError("synthetic leads rarely pass the speed std filter");
          auto tr = harness::synthetic_lead_trajectory(spec, s);
          if (harness::speed_std(tr) > batch_min_std) trajs.push_back(std::move(tr));
        }
      } else {
        throw DomainError("batch needs --trajectories or --random");
      }
      const auto summary = harness::batch_run(cfg, trajs, ens.members, batch_out, batch_min_std);
      std::cout << summary.rows.size() << " scenarios, " << summary.failures << " failed\n";
      return summary.failures ? 1 : 0;
    }

    if (*met) {
      const auto records = harness::load_records_csv(met_records);
      harness::MetricsParams mp = met_mp;
      if (!met_params.empty()) {
        std::ifstream in(met_params);
        mp = harness::metrics_params_from_json(nlohmann::json::parse(in));
      }
      const auto report = harness::compute_metrics(records, mp);
      const auto doc = harness::metrics_json(report).dump(2);
      if (met_out.empty()) {
        std::cout << doc << '\n';
      } else {
        auto f = open_out(met_out);
        f << doc << '\n';
      }
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
