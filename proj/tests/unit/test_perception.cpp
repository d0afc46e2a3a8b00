#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"

using namespace eacc;
using namespace eacc::perception;

namespace {

SensorModel noiseless() {
  SensorModel m;
  m.base_noise = 0.0;
  return m;
}

}  // namespace

TEST(Sensor, SaturatesBeyondDSat) {
  const auto m = noiseless();
  const auto a = clean_features(m, m.d_sat);
  const auto b = clean_features(m, m.d_sat + 10);
  EXPECT_EQ(a.left, b.left);
  EXPECT_EQ(a.right, b.right);
  const auto c = clean_features(m, m.d_sat - 1);
  EXPECT_NE(a.left, c.left);
}

TEST(Sensor, SameSeedSameObservation) {
  SensorModel m;
  std::mt19937_64 r1(9), r2(9);
  const auto a = synth_observe(m, 12.3, false, r1);
  const auto b = synth_observe(m, 12.3, false, r2);
  EXPECT_EQ(a.left, b.left);
  EXPECT_EQ(a.right, b.right);
}

TEST(Sensor, OodDiffersByExactlyTheShift) {
  auto m = noiseless();
  std::mt19937_64 rng(1);
  const auto in = synth_observe(m, 8.0, false, rng);
  const auto out = synth_observe(m, 8.0, true, rng);
  for (int j = 0; j < m.feature_dim(); ++j) {
    const double s = m.ood_shift[static_cast<std::size_t>(j)];
    EXPECT_EQ(out.left[j], (in.left[j] + s) * m.ood_scale);
    EXPECT_EQ(out.right[j], (in.right[j] + s) * m.ood_scale);
  }
  m.ood_scale = 1.5;
  const auto scaled = synth_observe(m, 8.0, true, rng);
  EXPECT_DOUBLE_EQ(scaled.left[0], (in.left[0] + m.ood_shift[0]) * 1.5);
}

TEST(Sensor, RejectsNonPositiveHeadway) {
  SensorModel m;
  std::mt19937_64 rng(1);
  EXPECT_THROW(synth_observe(m, 0.0, false, rng), DomainError);
  EXPECT_THROW(synth_observe(m, std::nan(""), false, rng), DomainError);
}

TEST(Regressor, ZeroParamsGiveLog2Variance) {
  const auto p = RegressorParams::zeros(8, 5);
  const auto e = regressor_forward(p, clean_features(SensorModel{}, 10.0));
  EXPECT_EQ(e.p, 0.0);
  EXPECT_DOUBLE_EQ(e.var, p.epsilon + std::log(2.0));
}

TEST(Regressor, VarianceFloorAndPositivity) {
  auto p = RegressorParams::zeros(8, 5);
  p.b2[1] = -800.0;
  EXPECT_DOUBLE_EQ(regressor_forward(p, clean_features(SensorModel{}, 10.0)).var, p.epsilon);

  std::mt19937_64 rng(5);
  SensorModel m;
  for (int k = 0; k < 200; ++k) {
    auto q = random_params(8, 16, rng, 5.0);
    const auto e = regressor_forward(q, synth_observe(m, 3.0 + k * 0.1, false, rng));
    EXPECT_GT(e.var, 0.0);
  }
}

TEST(Regressor, ShapeMismatchRejected) {
  const auto p = RegressorParams::zeros(8, 5);
  ObservationPair obs{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)};
  EXPECT_THROW(regressor_forward(p, obs), DomainError);
  ObservationPair lopsided{Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(7)};
  EXPECT_THROW(regressor_forward(p, lopsided), DomainError);
}

TEST(Loss, Examples) {
  const auto obs = clean_features(SensorModel{}, 10.0);
  // Constant-output members pin p and var exactly.
  auto at = [&](double p, double var) { return oracle::constant_member(p, var); };
  const double d = 7.0;
  EXPECT_NEAR(nll_loss(at(d, 1.0), {{d, obs}}), 0.0, 1e-12);
  EXPECT_NEAR(nll_loss(at(d + 1, 1.0), {{d, obs}}), 1.0, 1e-12);
  EXPECT_NEAR(nll_loss(at(d, std::exp(1.0)), {{d, obs}}), 1.0, 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = oracle::finite_difference_check(seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, VanishesAtTheVarianceFloorMinimum) {
  // Mean head on the datum, variance head driven to the floor: both heads stationary.
  auto p = RegressorParams::zeros(8, 6);
  p.b2[0] = 9.5;
  p.b2[1] = -40.0;
  const TrainingSet batch{{9.5, clean_features(SensorModel{}, 9.5)}};
  EXPECT_LT(nll_gradient(p, batch).flatten().norm(), 1e-8);
}

TEST(Gradient, ZeroOutputWeightsClosedForm) {
  // With W2 = 0 the outputs are the biases; dL/dW2[0,:] = sum -2 (d - p) / var * h(x).
  std::mt19937_64 rng(17);
  SensorModel m;
  auto p = random_params(8, 10, rng);
  p.w2.setZero();
  p.b2 = {11.0, 0.7};
  const double var = p.epsilon + softplus(0.7);
  TrainingSet batch;
  for (double d : {3.0, 8.5, 14.0, 22.0}) batch.push_back({d, synth_observe(m, d, false, rng)});

  Eigen::VectorXd expect = Eigen::VectorXd::Zero(10);
  for (const auto& item : batch) {
    const Eigen::VectorXd h = (p.w1 * item.obs.stacked() + p.b1).cwiseMax(0.0);
    expect += -2.0 * (item.d - 11.0) / var * h;
  }
  const auto g = nll_gradient(p, batch);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(g.w2(0, i), expect[i], 1e-12 * (1 + std::fabs(expect[i])));
  // Nothing flows back into the first layer through zero output weights.
  EXPECT_EQ(g.w1.norm(), 0.0);
}

TEST(Training, ConstantTargetValidationLossDecreases) {
  const auto m = noiseless();
  TrainingSet data;
  for (int k = 0; k < 200; ++k) data.push_back({10.0, clean_features(m, 10.0)});
  TrainingHyper h;
  h.epochs = 10;
  h.hidden = 8;
  const auto r = train_regressor(data, h);
  ASSERT_EQ(r.val_loss.size(), 10u);
  for (std::size_t e = 1; e < r.val_loss.size(); ++e)
    EXPECT_LE(r.val_loss[e], r.val_loss[e - 1] + 1e-6) << "epoch " << e;
}

TEST(Training, SameSeedBitIdentical) {
  const auto data = generate_training_set(SensorModel{}, 400, 3);
  TrainingHyper h;
  h.epochs = 5;
  h.seed = 42;
  EXPECT_EQ(train_regressor(data, h).params, train_regressor(data, h).params);
}

TEST(Training, RejectsOutOfRangeTargets) {
  auto data = generate_training_set(SensorModel{}, 50, 3);
  data[7].d = 40.0;
  try {
    train_regressor(data, {});
    FAIL() << "expected a domain error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 7"), std::string::npos);
  }
}

TEST(Training, DivergenceIsReported) {
  const auto data = generate_training_set(SensorModel{}, 200, 3);
  TrainingHyper h;
  h.lr = 1e300;
  h.clip_norm = 0.0;
  h.epochs = 3;
  EXPECT_THROW(train_regressor(data, h), TrainingError);
}

TEST(Ensemble, BuildDeterminismAndDiversity) {
  const auto data = generate_training_set(SensorModel{}, 300, 4);
  TrainingHyper h;
  h.epochs = 3;
  EnsembleDiversity same{{16}, {5}, {64}};
  const auto twins = build_ensemble(data, 2, same, h);
  EXPECT_EQ(twins[0], twins[1]);

  const auto six = build_ensemble(data, 6, {}, h);
  for (std::size_t i = 0; i < six.size(); ++i)
    for (std::size_t j = i + 1; j < six.size(); ++j) EXPECT_FALSE(six[i] == six[j]);
  EXPECT_THROW(build_ensemble(data, 1, {}, h), DomainError);
}

TEST(Fusion, Examples) {
  auto f = fuse_estimates({{10, 1}, {10, 1}, {10, 1}});
  EXPECT_DOUBLE_EQ(f.p, 10);
  EXPECT_DOUBLE_EQ(f.var, 1);
  f = fuse_estimates({{10, 1}, {12, 1}});
  EXPECT_DOUBLE_EQ(f.p, 11);
  EXPECT_DOUBLE_EQ(f.var, 2);
  f = fuse_estimates({{10, 1}, {10, 3}});
  EXPECT_DOUBLE_EQ(f.p, 10);
  EXPECT_DOUBLE_EQ(f.var, 2);
  EXPECT_THROW(fuse_estimates({}), DomainError);
}

TEST(Fusion, TwoMemberMonteCarlo) {
  const auto obs = clean_features(SensorModel{}, 10.0);
  const auto e = ensemble_estimate({oracle::constant_member(10, 1), oracle::constant_member(12, 1)}, obs);
  const auto mc = oracle::mixture_monte_carlo({{10, 1}, {12, 1}}, 1'000'000, 2);
  // Three significant digits.
  EXPECT_NEAR(e.p, mc.mean, 0.005 * 11);
  EXPECT_NEAR(e.var, mc.var, 0.005 * 2);
  EXPECT_NEAR(e.p, 11.0, 1e-9);
  EXPECT_NEAR(e.var, 2.0, 1e-9);
}

TEST(Fusion, MemberVarianceNeverExceedsMixture) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> p(0, 30), v(0.01, 9);
  for (int k = 0; k < 1000; ++k) {
    std::vector<HeadwayEstimate> parts(4);
    double mean_var = 0;
    for (auto& e : parts) {
      e = {p(rng), v(rng)};
      mean_var += e.var / 4;
    }
    EXPECT_GE(fuse_estimates(parts).var, mean_var - 1e-12);
  }
}

TEST(TrainedEnsemble, UncertaintyGrowsPastSaturationAndUnderOod) {
  const auto& ens = eacc::testing::trained_ensemble();
  std::mt19937_64 rng(3);
  double near = 0, far = 0, in = 0, ood = 0;
  const int n = 40;
  for (int k = 0; k < n; ++k) {
    near += ensemble_estimate(ens.members, synth_observe(ens.sensor, 6.0, false, rng)).var / n;
    far += ensemble_estimate(ens.members, synth_observe(ens.sensor, 24.0, false, rng)).var / n;
  }
  for (double d = 2.0; d <= 25.0; d += 0.5) {
    in += ensemble_estimate(ens.members, synth_observe(ens.sensor, d, false, rng)).var;
    ood += ensemble_estimate(ens.members, synth_observe(ens.sensor, d, true, rng)).var;
  }
  EXPECT_GT(far, 2 * near);
  EXPECT_GT(ood, 1.5 * in);
}

TEST(TrainedEnsemble, AccurateInsideTheSensingRange) {
  const auto& ens = eacc::testing::trained_ensemble();
  std::mt19937_64 rng(4);
  double sq = 0;
  int n = 0;
  for (double d = 2.0; d <= 15.0; d += 0.25, ++n) {
    const auto e = ensemble_estimate(ens.members, synth_observe(ens.sensor, d, false, rng));
    sq += (e.p - d) * (e.p - d);
  }
  EXPECT_LT(std::sqrt(sq / n), 1.0);
}

TEST(Io, TrainingCsvRoundTrip) {
  const auto data = generate_training_set(SensorModel{}, 25, 6);
  std::stringstream ss;
  write_training_csv(ss, data);
  const auto back = read_training_csv(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    EXPECT_EQ(back[k].d, data[k].d);
    EXPECT_EQ(back[k].obs.left, data[k].obs.left);
    EXPECT_EQ(back[k].obs.right, data[k].obs.right);
  }
}

TEST(Io, TrainingCsvErrorsCarryLineNumbers) {
  std::stringstream ss("d,f1,f2\n1.0,2,3\n2.0,x,3\n");
  try {
    read_training_csv(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Io, RegressorRoundTripIsBitExact) {
  std::mt19937_64 rng(12);
  auto p = random_params(8, 7, rng);
  p.b2 = {3.25, -1.0 / 3.0};
  SensorModel s;
  s.seed = 99;
  s.ood_scale = 1.1;
  std::stringstream ss;
  write_regressor(ss, p, s);
  const auto back = read_regressor(ss);
  EXPECT_EQ(back.params, p);
  EXPECT_EQ(back.sensor.seed, 99u);
  EXPECT_EQ(back.sensor.ood_scale, 1.1);
  EXPECT_EQ(back.sensor.length_scales, s.length_scales);
}

TEST(Io, EnsembleManifestRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "eacc_test_ensemble";
  std::filesystem::remove_all(dir);
  Ensemble ens;
  std::mt19937_64 rng(2);
  ens.members = {random_params(8, 4, rng), random_params(8, 6, rng)};
  save_ensemble(dir / "ens.txt", ens);
  const auto back = load_ensemble(dir / "ens.txt");
  ASSERT_EQ(back.members.size(), 2u);
  EXPECT_EQ(back.members[0], ens.members[0]);
  EXPECT_EQ(back.members[1], ens.members[1]);
  EXPECT_THROW(load_ensemble(dir / "missing.txt"), ParseError);
  std::filesystem::remove_all(dir);
}
