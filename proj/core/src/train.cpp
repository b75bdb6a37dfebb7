#include "ptn/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "ptn/errors.hpp"
#include "ptn/eval.hpp"

namespace ptn {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double dataset_nll_per_var(const MpsModel& model, const DiscreteDataset& data,
                           TrainMethod method) {
  if (method == TrainMethod::naive_sgd)
    return naive_loss(model, data.view()) / static_cast<double>(model.length());
  return nll(model, data.view()).mean_nll / static_cast<double>(model.length());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw argument_error("TrainConfig: learning_rate must be positive");
  if (batch_size == 0) throw argument_error("TrainConfig: batch_size must be at least 1");
  if (epochs == 0) throw argument_error("TrainConfig: epochs must be at least 1");
  if (grad_clip && !(*grad_clip > 0.0))
    throw argument_error("TrainConfig: grad_clip must be positive when set");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::optional<double> grad_clip)
    : kind_(kind), lr_(learning_rate), clip_(grad_clip) {
  if (!(lr_ > 0.0)) throw argument_error("Optimizer: learning rate must be positive");
}

void Optimizer::step(MpsModel& model, const GradientSet& grads) {
  if (grads.cores.size() != model.length())
    throw shape_error("Optimizer::step: gradient core count mismatch");
  for (std::size_t n = 0; n < model.length(); ++n)
    if (grads.cores[n].size() != model.core(n).size())
      throw shape_error("Optimizer::step: gradient shape mismatch at core " + std::to_string(n));
  if (!grads.all_finite())
    throw numerical_error("Optimizer::step: non-finite gradient, aborting the update");

  double scale = 1.0;
  if (clip_) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > *clip_) scale = *clip_ / norm;
  }

  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t n = 0; n < model.length(); ++n) {
      double* p = model.core(n).data.data();
      const double* g = grads.cores[n].data();
      const std::size_t count = grads.cores[n].size();
      for (std::size_t i = 0; i < count; ++i) p[i] -= lr_ * scale * g[i];
    }
    return;
  }

  if (m_.empty()) {
    m_.resize(model.length());
    v_.resize(model.length());
    for (std::size_t n = 0; n < model.length(); ++n) {
      m_[n].assign(model.core(n).size(), 0.0);
      v_[n].assign(model.core(n).size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t n = 0; n < model.length(); ++n) {
    double* p = model.core(n).data.data();
    const double* g = grads.cores[n].data();
    double* m = m_[n].data();
    double* v = v_[n].data();
    const std::size_t count = grads.cores[n].size();
    for (std::size_t i = 0; i < count; ++i) {
      const double gi = scale * g[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
      p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
  }
}

void sgd_step(MpsModel& model, const GradientSet& grads, const TrainConfig& config) {
  Optimizer opt(OptimizerKind::sgd, config.learning_rate, config.grad_clip);
  opt.step(model, grads);
}

TrainResult train(MpsModel model, const DiscreteDataset& train_data,
                  const DiscreteDataset* validation, const TrainConfig& config,
                  TrainMethod method, const EpochCallback& on_row,
                  std::optional<std::uint64_t> max_iterations) {
  config.validate();
  if (train_data.rows() == 0) throw argument_error("train: empty dataset");
  if (train_data.columns() != model.length())
    throw shape_error("train: dataset has " + std::to_string(train_data.columns()) +
                      " columns but the model has " + std::to_string(model.length()) + " cores");
  for (std::size_t c = 0; c < train_data.columns(); ++c)
    if (train_data.cardinalities()[c] > model.dim(c))
      throw shape_error("train: column " + std::to_string(c) +
                        " cardinality exceeds the model's input dimension");

  TrainResult result{model, model, -1, std::numeric_limits<double>::infinity(), {},
                     std::nullopt, 0};
  Optimizer opt(config.optimizer, config.learning_rate, config.grad_clip);
  Rng shuffle_rng(config.seed);

  std::vector<std::size_t> order(train_data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_buf;
  std::uint64_t iteration = 0;
  bool stopped = false;

  for (std::size_t epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
    const auto epoch_start = Clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size() && !stopped;
         first += config.batch_size) {
      if (max_iterations && iteration >= *max_iterations) {
        stopped = true;
        break;
      }
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      batch_buf.resize(count * train_data.columns());
      for (std::size_t k = 0; k < count; ++k) {
        const auto row = train_data.row(order[first + k]);
        std::copy(row.begin(), row.end(), batch_buf.begin() + k * train_data.columns());
      }
      const SampleView batch(batch_buf.data(), count, train_data.columns());

      ++iteration;
      try {
        const LossAndGrad lg = method == TrainMethod::naive_sgd ? grad_nll_naive(model, batch)
                                                                : grad_nll(model, batch);
        if (!std::isfinite(lg.loss) || !lg.grads.all_finite())
          throw numerical_error("non-finite loss or gradient");
        opt.step(model, lg.grads);
        epoch_loss += lg.loss;
        ++batches;
        result.iterations_completed = iteration;
      } catch (const numerical_error&) {
        // First numerical failure ends the run; the iteration index is
        // the measurement the instability experiments harvest.
        result.failure_iteration = iteration;
        stopped = true;
      } catch (const zero_amplitude_error&) {
        result.failure_iteration = iteration;
        stopped = true;
      }
    }

    // An epoch that ran no batches (iteration cap hit on its boundary)
    // has nothing to report.
    if (batches == 0 && !result.failure_iteration) break;

    const int failures = result.failure_iteration ? 1 : 0;
    LogRow row{static_cast<int>(epoch), "train",
               batches > 0 ? epoch_loss / static_cast<double>(batches) /
                                 static_cast<double>(model.length())
                           : std::numeric_limits<double>::quiet_NaN(),
               elapsed_ms(epoch_start), failures, std::nullopt};
    result.log.push_back(row);
    if (on_row) on_row(row);

    if (validation && !result.failure_iteration) {
      const auto valid_start = Clock::now();
      const double valid_nll = dataset_nll_per_var(model, *validation, method);
      LogRow vrow{static_cast<int>(epoch), "valid", valid_nll, elapsed_ms(valid_start), failures,
                  std::nullopt};
      result.log.push_back(vrow);
      if (on_row) on_row(vrow);
      if (valid_nll < result.best_valid_nll_per_var) {
        result.best_valid_nll_per_var = valid_nll;
        result.best_epoch = static_cast<int>(epoch);
        result.best = model;
      }
    }
  }

  result.model = std::move(model);
  if (!validation) result.best = result.model;
  return result;
}

}  // namespace ptn
