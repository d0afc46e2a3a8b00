#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "eacc/errors.hpp"

namespace eacc::perception {

inline constexpr int kDefaultFeatureDim = 8;

// Synthetic stand-in for a stereo camera pair: one feature vector per camera.
struct ObservationPair {
  Eigen::VectorXd left;
  Eigen::VectorXd right;

  Eigen::Index dim() const { return left.size(); }

  Eigen::VectorXd stacked() const {
    Eigen::VectorXd z(left.size() + right.size());
    z << left, right;
    return z;
  }
};

// Each feature channel is gain * L_j / (d + L_j) + bias with per-channel length scale L_j,
// evaluated at min(d, d_sat); the right camera sees the same channels offset
// by a parallax baseline. Beyond d_sat the features carry no information,
// which is what makes far headways uncertain.
struct SensorModel {
  double d_lo = 1.0;
  double d_hi = 25.0;
  double d_sat = 20.0;
  double base_noise = 0.016;
  double noise_growth = 0.08;   // noise std multiplier per meter of headway
  double parallax = 0.75;       // m
  double feature_gain = 4.0;
  double feature_bias = -2.0;
  std::vector<double> length_scales{1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 14.0, 20.0};
  std::vector<double> ood_shift{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double ood_scale = 1.0;
  std::uint64_t seed = 1;

  int feature_dim() const { return static_cast<int>(length_scales.size()); }

  void validate() const {
    detail::require(d_lo < d_sat && d_sat <= d_hi, "SensorModel: need d_lo < d_sat <= d_hi");
    detail::require(base_noise >= 0.0 && noise_growth >= 0.0, "SensorModel: negative noise");
    detail::require(!length_scales.empty(), "SensorModel: no feature channels");
    detail::require(ood_shift.size() == length_scales.size(),
                    "SensorModel: ood_shift dimension must equal feature dimension");
    for (double l : length_scales) detail::require(l > 0.0, "SensorModel: length scale <= 0");
  }

  // Past d_sat the lead has vanished from the image, so the noise stops growing too.
  double noise_std(double d_true) const {
    return base_noise * (1.0 + noise_growth * std::min(d_true, d_sat));
  }
};

// Noise-free features; exposed so tests can check saturation directly.
inline ObservationPair clean_features(const SensorModel& m, double d_true) {
  const double d = std::min(d_true, m.d_sat);
  const auto f = m.feature_dim();
  ObservationPair obs{Eigen::VectorXd(f), Eigen::VectorXd(f)};
  for (int j = 0; j < f; ++j) {
    const double l = m.length_scales[static_cast<std::size_t>(j)];
    obs.left[j] = m.feature_gain * l / (d + l) + m.feature_bias;
    obs.right[j] = m.feature_gain * l / (d + m.parallax + l) + m.feature_bias;
  }
  return obs;
}

inline ObservationPair apply_ood(const SensorModel& m, ObservationPair obs) {
  for (int j = 0; j < obs.dim(); ++j) {
    const double shift = m.ood_shift[static_cast<std::size_t>(j)];
    obs.left[j] = (obs.left[j] + shift) * m.ood_scale;
    obs.right[j] = (obs.right[j] + shift) * m.ood_scale;
  }
  return obs;
}

template <class Rng>
ObservationPair synth_observe(const SensorModel& m, double d_true, bool ood, Rng& rng) {
  detail::require(std::isfinite(d_true) && d_true > 0.0, "synth_observe: d_true must be > 0");
  auto obs = clean_features(m, d_true);
  const double sd = m.noise_std(d_true);
  if (sd > 0.0) {
    std::normal_distribution<double> noise(0.0, sd);
    for (int j = 0; j < obs.dim(); ++j) obs.left[j] += noise(rng);
    for (int j = 0; j < obs.dim(); ++j) obs.right[j] += noise(rng);
  }
  return ood ? apply_ood(m, std::move(obs)) : obs;
}

}  // namespace eacc::perception
