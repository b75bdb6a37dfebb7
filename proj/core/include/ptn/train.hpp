#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ptn/data.hpp"
#include "ptn/grad.hpp"
#include "ptn/metrics.hpp"
#include "ptn/model.hpp"

namespace ptn {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double learning_rate = 5e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  std::optional<double> grad_clip;  // global L2 threshold; off by default
  double init_std = 0.0;            // <= 0 selects 1/sqrt(rank)

  void validate() const;  // throws argument_error
};

// Applies parameter updates in place. The adam variant keeps first and
// second moment state across steps. A non-finite gradient raises
// numerical_error before any parameter is touched; training never
// continues silently past one.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate,
            std::optional<double> grad_clip = std::nullopt);

  void step(MpsModel& model, const GradientSet& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  std::optional<double> clip_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
};

// One plain SGD update, config.learning_rate times the gradient.
void sgd_step(MpsModel& model, const GradientSet& grads, const TrainConfig& config);

// scaled_sgd is the stable path; naive_sgd drives the loss and gradients
// through unscaled contractions and exists so the overflow experiments
// have something to measure.
enum class TrainMethod { scaled_sgd, naive_sgd };

struct TrainResult {
  MpsModel model;  // parameters after the last completed iteration
  MpsModel best;   // best-validation snapshot (final model when no validation set)
  int best_epoch = -1;
  double best_valid_nll_per_var = std::numeric_limits<double>::infinity();
  std::vector<LogRow> log;
  // 1-based index of the first step whose loss or gradient went
  // non-finite; training stops there. iterations_completed counts the
  // steps that finished cleanly, which is what the instability metric
  // consumes.
  std::optional<std::uint64_t> failure_iteration;
  std::uint64_t iterations_completed = 0;
};

// Epochs of shuffled mini-batch gradient descent. Shuffling is
// Fisher-Yates driven by config.seed, so identical configs give
// bit-identical runs. Per-epoch rows report train (and, when given,
// validation) NLL per variable.
TrainResult train(MpsModel model, const DiscreteDataset& train_data,
                  const DiscreteDataset* validation, const TrainConfig& config,
                  TrainMethod method = TrainMethod::scaled_sgd,
                  const EpochCallback& on_row = {},
                  std::optional<std::uint64_t> max_iterations = std::nullopt);

}  // namespace ptn
