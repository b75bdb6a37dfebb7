#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ptn/errors.hpp"
#include "ptn/oracle.hpp"
#include "ptn/train.hpp"
#include "support.hpp"

using namespace ptn;
using test_support::random_model;

namespace {

DiscreteDataset bernoulli_dataset(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<int> values(rows * cols);
  for (int& v : values) v = static_cast<int>(rng.uniform_index(2));
  return DiscreteDataset(cols, std::vector<int>(cols, 2), std::move(values));
}

bool models_identical(const MpsModel& a, const MpsModel& b) {
  if (a.length() != b.length()) return false;
  for (std::size_t n = 0; n < a.length(); ++n) {
    const auto& ca = a.core(n).data;
    const auto& cb = b.core(n).data;
    if (ca.size() != cb.size()) return false;
    if (std::memcmp(ca.data(), cb.data(), ca.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("zero gradient leaves the model unchanged") {
    Rng rng(1);
    auto model = random_model(PositivityMode::sigma_exp, 4, 2, 2, rng);
    const MpsModel before = model;
    const GradientSet zeros = GradientSet::zeros_like(model);
    TrainConfig config;
    sgd_step(model, zeros, config);
    CHECK(models_identical(model, before));
  }

  TEST_CASE("unit learning rate with grad = parameters zeroes the cores") {
    Rng rng(2);
    auto model = random_model(PositivityMode::sigma_abs, 3, 2, 2, rng);
    GradientSet grads = GradientSet::zeros_like(model);
    for (std::size_t n = 0; n < model.length(); ++n) grads.cores[n] = model.core(n).data;
    TrainConfig config;
    config.learning_rate = 1.0;
    sgd_step(model, grads, config);
    for (std::size_t n = 0; n < model.length(); ++n)
      for (double x : model.core(n).data) CHECK(x == 0.0);
  }

  TEST_CASE("non-finite gradients abort before touching parameters") {
    Rng rng(3);
    auto model = random_model(PositivityMode::sigma_exp, 3, 2, 2, rng);
    const MpsModel before = model;
    GradientSet grads = GradientSet::zeros_like(model);
    grads.cores[1][0] = std::numeric_limits<double>::quiet_NaN();
    Optimizer opt(OptimizerKind::sgd, 0.1);
    CHECK_THROWS_AS(opt.step(model, grads), numerical_error);
    CHECK(models_identical(model, before));
  }

  TEST_CASE("same seed and config give bitwise-identical runs") {
    Rng data_rng(4);
    const DiscreteDataset data = bernoulli_dataset(64, 6, data_rng);
    for (const auto optimizer : {OptimizerKind::sgd, OptimizerKind::adam}) {
      TrainConfig config;
      config.learning_rate = 5e-3;
      config.batch_size = 16;
      config.epochs = 3;  // 12 iterations
      config.seed = 99;
      config.optimizer = optimizer;

      Rng ma(7), mb(7);
      std::vector<int> dims(6, 2);
      const auto a = train(MpsModel::random(PositivityMode::sigma_exp, dims, 3, ma), data,
                           nullptr, config);
      const auto b = train(MpsModel::random(PositivityMode::sigma_exp, dims, 3, mb), data,
                           nullptr, config);
      CHECK(a.iterations_completed == b.iterations_completed);
      CHECK(a.iterations_completed >= 10);
      CHECK(models_identical(a.model, b.model));
    }
  }

  TEST_CASE("training fits a two-variable joint") {
    // The trained model's joint must land within TV 0.02 of the
    // empirical distribution it was fitted to.
    Rng rng(5);
    std::vector<int> dims{2, 2};
    std::vector<std::vector<int>> rows;
    const int counts[2][2] = {{40, 10}, {5, 45}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < counts[a][b]; ++k) rows.push_back({a, b});
    const DiscreteDataset data = DiscreteDataset::from_rows(rows, dims);

    TrainConfig config;
    config.learning_rate = 0.05;
    config.optimizer = OptimizerKind::adam;
    config.batch_size = 25;
    config.epochs = 300;
    config.seed = 11;

    const auto result = train(MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng), data,
                              nullptr, config);
    REQUIRE(!result.failure_iteration);
    const EnumeratedJoint joint = enumerate_joint(result.model);
    const double total = 100.0;
    double tv = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const std::vector<int> y{a, b};
        tv += std::fabs(joint.probability(y) - counts[a][b] / total);
      }
    CHECK(tv * 0.5 <= 0.02);
  }

  TEST_CASE("gradient vanishes at the fitted optimum") {
    // Full-batch fitting of an enumerable two-variable problem, then an
    // sgd polish; the final full-batch gradient must be stationary.
    Rng rng(6);
    std::vector<int> dims{2, 2};
    std::vector<std::vector<int>> rows;
    const int counts[2][2] = {{12, 20}, {28, 40}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < counts[a][b]; ++k) rows.push_back({a, b});
    const DiscreteDataset data = DiscreteDataset::from_rows(rows, dims);

    TrainConfig config;
    config.learning_rate = 0.05;
    config.optimizer = OptimizerKind::adam;
    config.batch_size = data.rows();  // full batch
    config.epochs = 3000;
    config.seed = 12;
    auto result = train(MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng), data,
                        nullptr, config);
    REQUIRE(!result.failure_iteration);

    TrainConfig polish;
    polish.optimizer = OptimizerKind::sgd;
    polish.batch_size = data.rows();
    polish.epochs = 2000;
    polish.learning_rate = 0.2;
    polish.seed = 13;
    result = train(std::move(result.model), data, nullptr, polish);
    REQUIRE(!result.failure_iteration);

    const auto lg = grad_nll(result.model, data.view());
    CHECK(std::sqrt(lg.grads.squared_norm()) <= 1e-6);
  }

  TEST_CASE("loss decreases over the first five epochs of teacher data") {
    double first_sum = 0.0, last_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto [teacher, data] = synth_teacher(seed, 6, 2, 3, PositivityMode::sigma_exp, 512);
      TrainConfig config;
      config.learning_rate = 5e-3;
      config.batch_size = 32;
      config.epochs = 5;
      config.seed = seed;
      Rng rng(seed * 31);
      const auto result = train(
          MpsModel::random(PositivityMode::sigma_exp, teacher.dims(), 3, rng), data, nullptr,
          config);
      REQUIRE(!result.failure_iteration);
      REQUIRE(result.log.size() == 5);
      first_sum += result.log.front().nll_per_variable;
      last_sum += result.log.back().nll_per_variable;
    }
    CHECK(last_sum < first_sum);
  }

  TEST_CASE("naive training past the double range records the failing iteration") {
    Rng rng(7);
    const std::size_t n = 460;  // past the 64-bit overflow onset
    std::vector<int> dims(n, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng, 1.0);
    Rng data_rng(8);
    const DiscreteDataset data = bernoulli_dataset(64, n, data_rng);
    TrainConfig config;
    config.batch_size = 32;
    config.epochs = 4;
    const auto result =
        train(std::move(model), data, nullptr, config, TrainMethod::naive_sgd);
    REQUIRE(result.failure_iteration.has_value());
    CHECK(*result.failure_iteration == 1);
    CHECK(result.iterations_completed == 0);
    CHECK(result.log.back().failures == 1);

    // The scaled path trains the same configuration without incident.
    Rng rng2(7);
    MpsModel model2 = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng2, 1.0);
    TrainConfig longer = config;
    longer.epochs = 20;  // 40 candidate iterations, capped at 20
    const auto ok =
        train(std::move(model2), data, nullptr, longer, TrainMethod::scaled_sgd, {}, 20);
    CHECK(!ok.failure_iteration);
    CHECK(ok.iterations_completed == 20);
  }

  TEST_CASE("validation tracking returns the best checkpoint") {
    Rng rng(9);
    auto [teacher, data] = synth_teacher(17, 5, 2, 2, PositivityMode::sigma_exp, 400);
    auto [teacher2, valid] = synth_teacher(18, 5, 2, 2, PositivityMode::sigma_exp, 100);
    (void)teacher2;
    TrainConfig config;
    config.learning_rate = 0.01;
    config.batch_size = 32;
    config.epochs = 8;
    config.seed = 3;
    const auto result =
        train(MpsModel::random(PositivityMode::sigma_exp, teacher.dims(), 2, rng), data,
              &valid, config);
    REQUIRE(!result.failure_iteration);
    CHECK(result.best_epoch >= 0);
    const double best_nll = nll(result.best, valid.view()).mean_nll / 5.0;
    CHECK(best_nll == doctest::Approx(result.best_valid_nll_per_var).epsilon(1e-12));
    for (const auto& row : result.log)
      if (row.split == "valid")
        CHECK(row.nll_per_variable >= result.best_valid_nll_per_var - 1e-12);
  }

  TEST_CASE("global-norm clipping caps the update") {
    Rng rng(11);
    auto model = random_model(PositivityMode::sigma_exp, 3, 2, 2, rng);
    const MpsModel before = model;
    GradientSet grads = GradientSet::zeros_like(model);
    for (auto& core : grads.cores)
      for (double& x : core) x = 100.0;
    Optimizer opt(OptimizerKind::sgd, 1.0, 0.5);
    opt.step(model, grads);
    double moved = 0.0;
    for (std::size_t n = 0; n < model.length(); ++n)
      for (std::size_t i = 0; i < model.core(n).data.size(); ++i) {
        const double d = model.core(n).data[i] - before.core(n).data[i];
        moved += d * d;
      }
    CHECK(std::sqrt(moved) == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("config validation") {
    TrainConfig config;
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(config.validate(), argument_error);
    config.learning_rate = 0.1;
    config.batch_size = 0;
    CHECK_THROWS_AS(config.validate(), argument_error);
    config.batch_size = 8;
    config.epochs = 0;
    CHECK_THROWS_AS(config.validate(), argument_error);
    config.epochs = 1;
    config.grad_clip = -1.0;
    CHECK_THROWS_AS(config.validate(), argument_error);
  }

  TEST_CASE("dataset wider than the model's input legs is rejected") {
    Rng rng(10);
    std::vector<int> dims(3, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng);
    std::vector<std::vector<int>> rows{{0, 2, 0}};  // symbol 2 needs D >= 3
    const DiscreteDataset data = DiscreteDataset::from_rows(rows);
    TrainConfig config;
    CHECK_THROWS_AS(train(std::move(model), data, nullptr, config), shape_error);
  }
}
