#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "eacc/kinematics.hpp"

using namespace eacc;

TEST(StepKinematics, Examples) {
  auto s = step_kinematics({0, 10}, {2}, 1.0);
  EXPECT_DOUBLE_EQ(s.x, 11.0);
  EXPECT_DOUBLE_EQ(s.v, 12.0);

  s = step_kinematics({0, 0}, {0}, 1.0);
  EXPECT_EQ(s.x, 0.0);
  EXPECT_EQ(s.v, 0.0);

  s = step_kinematics({5, 3}, {-1}, 0.5);
  EXPECT_DOUBLE_EQ(s.x, 6.375);
  EXPECT_DOUBLE_EQ(s.v, 2.5);
}

TEST(StepKinematics, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step_kinematics({nan, 1}, {0}, 1.0), DomainError);
  EXPECT_THROW(step_kinematics({0, 1}, {nan}, 1.0), DomainError);
  EXPECT_THROW(step_kinematics({0, 1}, {0}, std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(step_kinematics({0, 1}, {0}, 0.0), DomainError);
  EXPECT_THROW(step_kinematics({0, 1}, {7.0}, 1.0), DomainError);
}

// Two half steps land where one full step does, as long as no limit is hit.
TEST(StepKinematics, HalfStepsComposeExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(5, 25), a(-2, 2), dt(0.01, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const VehicleState s{0.0, v(rng)};
    const ControlInput u{a(rng)};
    const double h = dt(rng);
    const auto full = step_kinematics(s, u, h);
    const auto half = step_kinematics(step_kinematics(s, u, h / 2), u, h / 2);
    EXPECT_NEAR(full.x, half.x, 1e-12);
    EXPECT_NEAR(full.v, half.v, 1e-12);
  }
}

TEST(StepKinematics, ReversesUnderNegatedTime) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(5, 25), a(-2, 2), dt(0.01, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const VehicleState s{1.0, v(rng)};
    const double acc = a(rng), h = dt(rng);
    const auto e = step_kinematics(s, {acc}, h);
    // Integrate backwards by hand: same constant acceleration, time reversed.
    EXPECT_NEAR(e.x - e.v * h + 0.5 * acc * h * h, s.x, 1e-10);
    EXPECT_NEAR(e.v - acc * h, s.v, 1e-12);
  }
}

TEST(StepKinematics, ClampsAtSpeedLimits) {
  // Braking from 2 m/s at 4 m/s^2 stops after 0.5 s, having covered 0.5 m.
  auto s = step_kinematics({0, 2}, {-4}, 1.0);
  EXPECT_DOUBLE_EQ(s.v, 0.0);
  EXPECT_DOUBLE_EQ(s.x, 0.5);

  // Accelerating into v_max = 34 from 33 at 2 m/s^2: 0.5 s to hit, then cruise.
  s = step_kinematics({0, 33}, {2}, 1.0);
  EXPECT_DOUBLE_EQ(s.v, 34.0);
  EXPECT_DOUBLE_EQ(s.x, 33 * 0.5 + 0.25 + 34 * 0.5);
}

TEST(BumperHeadway, Examples) {
  EXPECT_DOUBLE_EQ(bumper_headway({30, 0}, {0, 0}, {5}, {5}), 25.0);
  EXPECT_DOUBLE_EQ(bumper_headway({5, 0}, {0, 0}, {5}, {5}), 0.0);
  EXPECT_DOUBLE_EQ(bumper_headway({4, 0}, {0, 0}, {4}, {4}), 0.0);
  EXPECT_LT(bumper_headway({3, 0}, {0, 0}, {4}, {4}), 0.0);
}

TEST(BumperHeadway, ConsistentWithMotion) {
  // Headway change over a step equals the difference of displacements.
  const VehicleState lead{40, 20}, ego{0, 25};
  const auto lead1 = step_kinematics(lead, {0.5}, 0.3);
  const auto ego1 = step_kinematics(ego, {-1.0}, 0.3);
  const double d0 = bumper_headway(lead, ego, {}, {});
  const double d1 = bumper_headway(lead1, ego1, {}, {});
  EXPECT_NEAR(d1 - d0, (lead1.x - lead.x) - (ego1.x - ego.x), 1e-12);
}

TEST(LeadSpeedAt, Examples) {
  const SpeedTrajectory tr{1.0, {10, 12}};
  EXPECT_DOUBLE_EQ(lead_speed_at(tr, 0.5), 11.0);
  EXPECT_DOUBLE_EQ(lead_speed_at(tr, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(lead_speed_at(tr, 100.0), 12.0);
  EXPECT_THROW(lead_speed_at(tr, std::numeric_limits<double>::quiet_NaN()), DomainError);
  EXPECT_THROW(lead_speed_at(tr, -1.0), DomainError);
  EXPECT_THROW(lead_speed_at(SpeedTrajectory{1.0, {10}}, 0.0), DomainError);
}
