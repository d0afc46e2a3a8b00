#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eacc/errors.hpp"
#include "eacc/perception/sensor.hpp"

namespace eacc::perception {

inline constexpr double kVarianceFloor = 1e-6;

// Distance headway as a Gaussian: mean p and error variance var.
struct HeadwayEstimate {
  double p = 0.0;
  double var = 1.0;
};

struct LabeledObservation {
  double d = 0.0;
  ObservationPair obs;
};

using TrainingSet = std::vector<LabeledObservation>;

// Two-layer network: [left; right] (2F) -> ReLU hidden (H) -> (raw mean, raw variance).
struct RegressorParams {
  Eigen::MatrixXd w1;  // H x 2F
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // 2 x H
  Eigen::Vector2d b2 = Eigen::Vector2d::Zero();
  double epsilon = kVarianceFloor;

  static RegressorParams zeros(int feature_dim, int hidden) {
    RegressorParams p;
    p.w1 = Eigen::MatrixXd::Zero(hidden, 2 * feature_dim);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    p.w2 = Eigen::MatrixXd::Zero(2, hidden);
    return p;
  }

  int feature_dim() const { return static_cast<int>(w1.cols() / 2); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  void check_shapes() const {
    detail::require(w1.cols() % 2 == 0 && w1.rows() > 0, "RegressorParams: bad w1 shape");
    detail::require(b1.size() == w1.rows(), "RegressorParams: b1 size != H");
    detail::require(w2.rows() == 2 && w2.cols() == w1.rows(), "RegressorParams: w2 must be 2 x H");
  }

  // Flat view in a fixed order (w1 row-major, b1, w2 row-major, b2). Used by
  // the optimizer and by tests that perturb single coordinates.
  Eigen::Index size() const { return w1.size() + b1.size() + w2.size() + 2; }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(size());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
      for (Eigen::Index c = 0; c < w1.cols(); ++c) out[k++] = w1(r, c);
    for (Eigen::Index i = 0; i < b1.size(); ++i) out[k++] = b1[i];
    for (Eigen::Index r = 0; r < 2; ++r)
      for (Eigen::Index c = 0; c < w2.cols(); ++c) out[k++] = w2(r, c);
    out[k++] = b2[0];
    out[k++] = b2[1];
    return out;
  }

  void unflatten(const Eigen::VectorXd& flat) {
    detail::require(flat.size() == size(), "RegressorParams: flat size mismatch");
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
      for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = flat[k++];
    for (Eigen::Index r = 0; r < 2; ++r)
      for (Eigen::Index c = 0; c < w2.cols(); ++c) w2(r, c) = flat[k++];
    b2[0] = flat[k++];
    b2[1] = flat[k++];
  }

  friend bool operator==(const RegressorParams& a, const RegressorParams& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 &&
           a.epsilon == b.epsilon;
  }
};

// log(1 + exp(s)) without overflow for large |s|.
inline double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline double inverse_softplus(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

namespace nn_detail {

struct ForwardCache {
  Eigen::VectorXd input;
  Eigen::VectorXd pre;     // W1 z0 + b1
  Eigen::VectorXd hidden;  // relu(pre)
  double p = 0.0;
  double s = 0.0;  // raw variance head
  double var = 0.0;
};

inline ForwardCache forward_cached(const RegressorParams& params, const ObservationPair& obs) {
  eacc::detail::require(obs.left.size() == obs.right.size(),
                        "regressor_forward: left/right dimension mismatch");
  eacc::detail::require(2 * obs.left.size() == params.w1.cols(),
                        "regressor_forward: observation dimension does not match params");
  ForwardCache c;
  c.input = obs.stacked();
  c.pre = params.w1 * c.input + params.b1;
  c.hidden = c.pre.cwiseMax(0.0);
  const Eigen::Vector2d out = params.w2 * c.hidden + params.b2;
  c.p = out[0];
  c.s = out[1];
  c.var = params.epsilon + softplus(c.s);
  return c;
}

}  // namespace nn_detail

inline HeadwayEstimate regressor_forward(const RegressorParams& params, const ObservationPair& obs) {
  params.check_shapes();
  const auto c = nn_detail::forward_cached(params, obs);
  return {c.p, c.var};
}

inline double nll_term(double d, const HeadwayEstimate& e) {
  const double r = d - e.p;
  return std::log(e.var) + r * r / e.var;
}

// Sum over the batch of log var + (d - p)^2 / var.
inline double nll_loss(const RegressorParams& params, const TrainingSet& batch) {
  eacc::detail::require(!batch.empty(), "nll_loss: empty batch");
  params.check_shapes();
  double total = 0.0;
  for (const auto& item : batch) total += nll_term(item.d, regressor_forward(params, item.obs));
  return total;
}

// Accumulates the gradient of one sample's loss term into `grad` (same shapes
// as params). Returns the loss term.
inline double accumulate_nll_gradient(const RegressorParams& params, const LabeledObservation& item,
                                      RegressorParams& grad) {
  const auto c = nn_detail::forward_cached(params, item.obs);
  const double r = item.d - c.p;
  const double dl_dp = -2.0 * r / c.var;
  const double dl_dvar = 1.0 / c.var - r * r / (c.var * c.var);
  const double dl_ds = dl_dvar * sigmoid(c.s);

  grad.w2.row(0) += dl_dp * c.hidden.transpose();
  grad.w2.row(1) += dl_ds * c.hidden.transpose();
  grad.b2[0] += dl_dp;
  grad.b2[1] += dl_ds;

  Eigen::VectorXd dh = params.w2.row(0).transpose() * dl_dp + params.w2.row(1).transpose() * dl_ds;
  for (Eigen::Index i = 0; i < dh.size(); ++i)
    if (c.pre[i] <= 0.0) dh[i] = 0.0;
  grad.w1.noalias() += dh * c.input.transpose();
  grad.b1 += dh;
  return std::log(c.var) + r * r / c.var;
}

inline RegressorParams nll_gradient(const RegressorParams& params, const TrainingSet& batch) {
  eacc::detail::require(!batch.empty(), "nll_gradient: empty batch");
  params.check_shapes();
  auto grad = RegressorParams::zeros(params.feature_dim(), params.hidden());
  grad.epsilon = 0.0;
  for (const auto& item : batch) accumulate_nll_gradient(params, item, grad);
  return grad;
}

// He-style random initialization for the hidden layer; small output weights.
template <class Rng>
RegressorParams random_params(int feature_dim, int hidden, Rng& rng, double scale = 1.0) {
  auto p = RegressorParams::zeros(feature_dim, hidden);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s1 = scale * std::sqrt(2.0 / (2.0 * feature_dim));
  const double s2 = scale * std::sqrt(1.0 / hidden);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = s1 * n01(rng);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = 0.1 * scale * n01(rng);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = s2 * n01(rng);
  return p;
}

}  // namespace eacc::perception
