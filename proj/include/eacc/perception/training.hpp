#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/perception/regressor.hpp"

namespace eacc::perception {

// Sum: the batch loss is the plain sum of per-sample NLL terms.
// Mean: the sum divided by the batch size.
enum class BatchReduction { sum, mean };

struct TrainingHyper {
  double lr = 0.001;
  double momentum = 0.9;
  int epochs = 100;
  int batch_size = 64;
  int hidden = 32;
  double validation_fraction = 0.2;
  BatchReduction reduction = BatchReduction::sum;
  double clip_norm = 10.0;  // max L2 norm of the batch gradient; 0 disables
  std::uint64_t seed = 0;
};

struct TrainedRegressor {
  RegressorParams params;            // best-validation checkpoint
  std::vector<double> val_loss;      // mean validation NLL after each epoch
  std::vector<double> train_loss;    // mean training NLL over each epoch's batches
  int best_epoch = -1;               // -1: the initialization was never beaten
};

struct HeadwayRange {
  double lo = 1.0;
  double hi = 25.0;
};

inline void validate_training_set(const TrainingSet& data, HeadwayRange range = {}) {
  detail::require(!data.empty(), "training set is empty");
  const auto dim = data.front().obs.dim();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& item = data[k];
    if (!(item.d >= range.lo && item.d <= range.hi)) {
      std::ostringstream os;
      os << "training sample " << k << ": headway " << item.d << " outside [" << range.lo << ", "
         << range.hi << "] m";
      throw DomainError(os.str());
    }
    detail::require(item.obs.left.size() == dim && item.obs.right.size() == dim,
                    "training set: inconsistent feature dimension");
    detail::require(item.obs.left.allFinite() && item.obs.right.allFinite(),
                    "training set: non-finite feature");
  }
}

inline double mean_nll(const RegressorParams& params, const TrainingSet& data,
                       const std::vector<std::size_t>& idx) {
  double total = 0.0;
  for (auto k : idx) total += nll_term(data[k].d, regressor_forward(params, data[k].obs));
  return total / static_cast<double>(idx.size());
}

// Mini-batch SGD with classical momentum on the batch NLL:
//   v <- momentum * v + g;  theta <- theta - lr * v
// A seeded shuffle picks the train/validation split once, then reorders the
// training indices every epoch.
inline TrainedRegressor train_regressor(const TrainingSet& data, const TrainingHyper& hyper,
                                        HeadwayRange range = {}) {
  validate_training_set(data, range);
  detail::require(hyper.lr > 0.0 && hyper.momentum >= 0.0 && hyper.momentum < 1.0,
                  "train_regressor: bad lr/momentum");
  detail::require(hyper.epochs >= 1 && hyper.batch_size >= 1 && hyper.hidden >= 1,
                  "train_regressor: epochs, batch_size and hidden must be >= 1");
  detail::require(data.size() >= 2, "train_regressor: need at least 2 samples for a split");

  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::round(hyper.validation_fraction * data.size()));
  n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  const int f = static_cast<int>(data.front().obs.dim());
  auto params = random_params(f, hyper.hidden, rng);

  // Start the heads at the marginal distribution of the training targets.
  double mean = 0.0, sq = 0.0;
  for (auto k : train) mean += data[k].d;
  mean /= static_cast<double>(train.size());
  for (auto k : train) sq += (data[k].d - mean) * (data[k].d - mean);
  const double var0 = std::max(sq / static_cast<double>(train.size()), 1e-2);
  params.b2[0] = mean;
  params.b2[1] = inverse_softplus(var0);

  TrainedRegressor out;
  out.params = params;
  double best = mean_nll(params, data, val);

  Eigen::VectorXd theta = params.flatten();
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
  auto grad = RegressorParams::zeros(f, hyper.hidden);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const auto stop = std::min(train.size(), start + static_cast<std::size_t>(hyper.batch_size));
      grad.w1.setZero();
      grad.b1.setZero();
      grad.w2.setZero();
      grad.b2.setZero();
      double batch_loss = 0.0;
      for (auto j = start; j < stop; ++j)
        batch_loss += accumulate_nll_gradient(params, data[train[j]], grad);
      const double scale =
          hyper.reduction == BatchReduction::sum ? 1.0 : 1.0 / static_cast<double>(stop - start);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "train_regressor: non-finite loss at epoch " << epoch << ", batch starting at "
           << start << " (lr=" << hyper.lr << ", seed=" << hyper.seed << ")";
        throw TrainingError(os.str());
      }
      epoch_loss += batch_loss;
      Eigen::VectorXd g = scale * grad.flatten();
      if (hyper.clip_norm > 0.0) {
        const double norm = g.norm();
        if (norm > hyper.clip_norm) g *= hyper.clip_norm / norm;
      }
      velocity = hyper.momentum * velocity + g;
      theta -= hyper.lr * velocity;
      params.unflatten(theta);
    }
    const double v = mean_nll(params, data, val);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "train_regressor: non-finite validation loss at epoch " << epoch
         << " (seed=" << hyper.seed << ")";
      throw TrainingError(os.str());
    }
    out.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    out.val_loss.push_back(v);
    if (v < best) {
      best = v;
      out.params = params;
      out.best_epoch = epoch;
    }
  }
  return out;
}

struct EnsembleDiversity {
  std::vector<int> hidden_widths{16, 24, 32, 48, 64, 96};
  std::vector<std::uint64_t> seeds{11, 23, 37, 41, 53, 67};
  std::vector<int> batch_sizes{60, 105, 500, 65, 60, 75};
};

// Member i uses hidden_widths[i % size], seeds[i % size], batch_sizes[i % size].
inline std::vector<RegressorParams> build_ensemble(const TrainingSet& data, int n,
                                                   const EnsembleDiversity& diversity,
                                                   TrainingHyper base = {},
                                                   HeadwayRange range = {}) {
  detail::require(n >= 2, "build_ensemble: need n >= 2 members");
  detail::require(!diversity.hidden_widths.empty() && !diversity.seeds.empty() &&
                      !diversity.batch_sizes.empty(),
                  "build_ensemble: empty diversity lists");
  std::vector<RegressorParams> members;
  members.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    TrainingHyper h = base;
    h.hidden = diversity.hidden_widths[k % diversity.hidden_widths.size()];
    h.seed = diversity.seeds[k % diversity.seeds.size()];
    h.batch_size = diversity.batch_sizes[k % diversity.batch_sizes.size()];
    members.push_back(train_regressor(data, h, range).params);
  }
  return members;
}

}  // namespace eacc::perception
