// Acceptance suite: the project's top-level checks, one per criterion,
// each printing a PASS/FAIL line with its measured numbers. Criteria 5
// and 9 need the public benchmark datasets on disk (see README); when
// the files are absent they SKIP rather than report a bogus result.
//
// Usage: ptn_acceptance [criterion]
//   no argument  - run all criteria; exit 1 if any fail
//   1..10        - run one criterion; exit 0 pass, 1 fail, 77 skip

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ptn/data.hpp"
#include "ptn/diagnostics.hpp"
#include "ptn/dmrg.hpp"
#include "ptn/errors.hpp"
#include "ptn/eval.hpp"
#include "ptn/grad.hpp"
#include "ptn/model.hpp"
#include "ptn/oracle.hpp"
#include "ptn/sampling.hpp"
#include "ptn/train.hpp"

namespace fs = std::filesystem;
using namespace ptn;

namespace {

enum class Outcome { pass, fail, skip };

struct CriterionResult {
  Outcome outcome = Outcome::fail;
  std::string detail;
};

fs::path data_dir() {
  const char* dir = std::getenv("PTN_DATA_DIR");
  return dir ? fs::path(dir) : fs::path("data");
}

bool close_log(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

DiscreteDataset bernoulli_dataset(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> values(rows * cols);
  for (int& v : values) v = static_cast<int>(rng.uniform_index(2));
  return DiscreteDataset(cols, std::vector<int>(cols, 2), std::move(values));
}

constexpr PositivityMode kModes[] = {PositivityMode::born, PositivityMode::sigma_exp,
                                     PositivityMode::sigma_abs, PositivityMode::sigma_sq,
                                     PositivityMode::sigma_softplus};

// ---------------------------------------------------------------- 1 ---
// Stable log Z, log p, conditionals and marginals against brute-force
// enumeration: 200 random models over all five modes, N <= 8, D <= 3,
// R <= 4, everything within 1e-9.
CriterionResult criterion_1() {
  Rng rng(101);
  double worst = 0.0;
  for (int m = 0; m < 200; ++m) {
    const PositivityMode mode = kModes[m % 5];
    const std::size_t n = 1 + rng.uniform_index(8);
    const std::size_t rank = 1 + rng.uniform_index(4);
    std::vector<int> dims(n);
    for (auto& d : dims) d = 1 + static_cast<int>(rng.uniform_index(3));
    const MpsModel model = MpsModel::random(mode, dims, rank, rng);
    const EnumeratedJoint joint = enumerate_joint(model);

    const double lz = log_normalizer(model);
    if (!close_log(lz, std::log(joint.z), 1e-9))
      return {Outcome::fail, "log Z mismatch on model " + std::to_string(m)};
    worst = std::max(worst, std::fabs(lz - std::log(joint.z)));

    for (int rep = 0; rep < 2; ++rep) {
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i)
        y[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dims[i])));
      const double lp = log_mass(model, y) - lz;
      const double ref = std::log(joint.probability(y));
      if (!close_log(lp, ref, 1e-9))
        return {Outcome::fail, "log p mismatch on model " + std::to_string(m)};
      worst = std::max(worst, std::fabs(lp - ref));
    }

    if (n >= 2) {
      std::vector<int> prefix(rng.uniform_index(n - 1) + 1);
      for (std::size_t i = 0; i < prefix.size(); ++i)
        prefix[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dims[i])));
      try {
        const auto got = conditional_dist(model, prefix);
        const auto ref = oracle_conditional(joint, prefix);
        for (std::size_t i = 0; i < got.size(); ++i)
          if (std::fabs(got[i] - ref[i]) > 1e-9)
            return {Outcome::fail, "conditional mismatch on model " + std::to_string(m)};
      } catch (const zero_amplitude_error&) {
        // a measure-zero prefix under sigma_sq/abs; nothing to compare
      }
    }

    PartialAssignment subset;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < 0.5)
        subset[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dims[i])));
    if (!subset.empty()) {
      const double got = log_marginal(model, subset);
      const double ref = oracle_log_marginal(joint, subset);
      if (std::isfinite(got) || std::isfinite(ref)) {
        if (!close_log(got, ref, 1e-9))
          return {Outcome::fail, "marginal mismatch on model " + std::to_string(m)};
      }
    }
  }
  std::ostringstream ss;
  ss << "200 models, all modes, worst log deviation " << worst;
  return {Outcome::pass, ss.str()};
}

// ---------------------------------------------------------------- 2 ---
// grad_nll vs central finite differences (h = 1e-5) on 50 random small
// models across all modes: max relative error <= 1e-5 per coordinate.
CriterionResult criterion_2() {
  Rng rng(202);
  double worst = 0.0;
  for (int m = 0; m < 50; ++m) {
    const PositivityMode mode = kModes[m % 5];
    const std::size_t n = 2 + rng.uniform_index(5);
    const std::size_t rank = 1 + rng.uniform_index(3);
    std::vector<int> dims(n);
    for (auto& d : dims) d = 1 + static_cast<int>(rng.uniform_index(3));
    const MpsModel model = MpsModel::random(mode, dims, rank, rng);

    std::vector<int> rows;
    for (int s = 0; s < 2; ++s)
      for (std::size_t i = 0; i < n; ++i)
        rows.push_back(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dims[i]))));
    const auto report = grad_check(model, SampleView(rows.data(), 2, n), 1e-5);
    worst = std::max(worst, report.max_rel_error);
    if (report.max_rel_error > 1e-5) {
      std::ostringstream ss;
      ss << "model " << m << " (" << to_string(mode) << "): max rel error "
         << report.max_rel_error << " at core " << report.worst_core;
      return {Outcome::fail, ss.str()};
    }
  }
  std::ostringstream ss;
  ss << "50 models, worst coordinate rel error " << worst;
  return {Outcome::pass, ss.str()};
}

// ---------------------------------------------------------------- 3 ---
// Scaled SGD survives 1000 iterations at N = 100, 1000, 10000 (sigma_exp,
// R = 2, D = 2, unit-variance init); naive SGD at N = 100 must fail
// within 5 iterations. The naive half encodes the paper's float32
// observation; in the 64-bit arithmetic this build is required to use,
// the overflow onset sits near N = 420, which the run below reports.
CriterionResult criterion_3() {
  std::ostringstream detail;
  for (const std::size_t n : {std::size_t{100}, std::size_t{1000}, std::size_t{10000}}) {
    Rng rng(303 + n);
    std::vector<int> dims(n, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng, 1.0);
    const DiscreteDataset data = bernoulli_dataset(256, n, 404 + n);
    TrainConfig config;
    config.learning_rate = 5e-3;
    config.batch_size = 32;
    config.epochs = 200;
    config.seed = 1;
    config.init_std = 1.0;
    const auto result =
        train(std::move(model), data, nullptr, config, TrainMethod::scaled_sgd, {}, 1000);
    if (result.failure_iteration || result.iterations_completed != 1000) {
      std::ostringstream ss;
      ss << "scaled run at N = " << n << " failed after " << result.iterations_completed
         << " iterations";
      return {Outcome::fail, ss.str()};
    }
    for (const auto& row : result.log)
      if (!std::isfinite(row.nll_per_variable))
        return {Outcome::fail, "scaled run logged a non-finite loss at N = " +
                                   std::to_string(n)};
  }
  detail << "scaled: 1000/1000 iterations finite at N = 100, 1000, 10000; ";

  {
    Rng rng(305);
    std::vector<int> dims(100, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng, 1.0);
    const DiscreteDataset data = bernoulli_dataset(256, 100, 406);
    TrainConfig config;
    config.learning_rate = 5e-3;
    config.batch_size = 32;
    config.epochs = 200;
    config.seed = 1;
    config.init_std = 1.0;
    const auto result =
        train(std::move(model), data, nullptr, config, TrainMethod::naive_sgd, {}, 1000);

    // For context: the 64-bit onset, measured the same way.
    const std::vector<std::size_t> onset_grid{420};
    OnsetConfig oc;
    oc.init_std = 1.0;
    oc.seed = 1;
    const auto onset =
        overflow_onset(TrainMethod::naive_sgd, PositivityMode::sigma_exp, onset_grid, 10, oc);
    detail << "naive at N = 100: "
           << (result.failure_iteration
                   ? "failed at iteration " + std::to_string(*result.failure_iteration)
                   : "no failure within 1000 iterations")
           << " (64-bit onset: N = 420 fails after "
           << onset.front().max_iterations_reached << " iterations)";

    if (!result.failure_iteration || *result.failure_iteration > 5)
      return {Outcome::fail, detail.str() +
                                 " -- naive SGD did not fail within 5 iterations at N = 100; "
                                 "double precision moves the overflow onset to N ~ 420"};
  }
  return {Outcome::pass, detail.str()};
}

// ---------------------------------------------------------------- 4 ---
// Monte-Carlo growth slopes. sigma_abs: mean log Z slope vs
// log R + log D + 0.5 log(2/pi) within 5% (N up to 200, 500 trials).
// born: slope of the log Monte-Carlo mean of Psi^2 vs log R within 10%.
CriterionResult criterion_4() {
  const std::vector<std::size_t> abs_grid{25, 50, 75, 100, 150, 200};
  const GrowthCurve abs_curve =
      mc_growth(PositivityMode::sigma_abs, abs_grid, 2, 2, 500, 411);
  const double abs_slope = fitted_slope(abs_curve);
  const double abs_target = std::log(2.0) + std::log(2.0) + 0.5 * std::log(2.0 / std::numbers::pi);
  const double abs_err = std::fabs(abs_slope - abs_target) / abs_target;

  const std::vector<std::size_t> born_grid{2, 4, 6, 8, 10, 12};
  const GrowthCurve born_curve = mc_growth(PositivityMode::born, born_grid, 2, 2, 30000, 421);
  const double born_slope = fitted_slope(born_curve);
  const double born_target = std::log(2.0);
  const double born_err = std::fabs(born_slope - born_target) / born_target;

  std::ostringstream ss;
  ss << "sigma_abs slope " << abs_slope << " vs " << abs_target << " (" << abs_err * 100.0
     << "%), born slope " << born_slope << " vs " << born_target << " (" << born_err * 100.0
     << "%)";
  if (abs_err > 0.05) return {Outcome::fail, ss.str()};
  if (born_err > 0.10) return {Outcome::fail, ss.str()};
  return {Outcome::pass, ss.str()};
}

// ---------------------------------------------------------------- 5 ---
// nltcs to 0.40 nats/variable within 50 epochs at R = 32, lr 5e-3,
// batch 32; plus one clean epoch on a 1556-column synthetic stand-in.
CriterionResult criterion_5() {
  {
    const std::size_t n = 1556;
    Rng rng(5150);
    std::vector<int> dims(n, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 16, rng);
    const DiscreteDataset data = bernoulli_dataset(640, n, 5151);
    TrainConfig config;
    config.learning_rate = 5e-3;
    config.batch_size = 32;
    config.epochs = 1;
    config.seed = 2;
    const auto result = train(std::move(model), data, nullptr, config);
    if (result.failure_iteration)
      return {Outcome::fail, "stand-in with 1556 columns hit a numerical failure at iteration " +
                                 std::to_string(*result.failure_iteration)};
  }

  const fs::path train_path = data_dir() / "nltcs.train.data";
  const fs::path valid_path = data_dir() / "nltcs.valid.data";
  const fs::path test_path = data_dir() / "nltcs.test.data";
  if (!fs::exists(train_path) || !fs::exists(valid_path) || !fs::exists(test_path))
    return {Outcome::skip,
            "stand-in with 1556 columns trained cleanly; nltcs files not found under " +
                data_dir().string() + " (see README: fetching the density-estimation benchmarks)"};

  const DiscreteDataset train_data = load_csv01(train_path, std::nullopt, {}, SplitTag::train);
  const DiscreteDataset valid_data = load_csv01(valid_path, std::nullopt, {}, SplitTag::valid);
  const DiscreteDataset test_data = load_csv01(test_path, std::nullopt, {}, SplitTag::test);
  if (train_data.columns() != 16) return {Outcome::fail, "nltcs should have 16 columns"};

  Rng rng(5100);
  MpsModel model =
      MpsModel::random(PositivityMode::sigma_exp, train_data.cardinalities(), 32, rng);
  TrainConfig config;
  config.learning_rate = 5e-3;
  config.batch_size = 32;
  config.epochs = 50;
  config.seed = 0;
  // The bare lr-5e-3 SGD recipe underdetermines convergence; adam at the
  // same pinned rate/batch/rank crosses the initial plateau.
  config.optimizer = OptimizerKind::adam;
  const auto result = train(std::move(model), train_data, &valid_data, config);
  if (result.failure_iteration)
    return {Outcome::fail, "nltcs training failed at iteration " +
                               std::to_string(*result.failure_iteration)};
  const double test_nll =
      nll(result.best, test_data.view()).mean_nll / static_cast<double>(16);
  std::ostringstream ss;
  ss << "nltcs test NLL/variable " << test_nll << " (threshold 0.40, best epoch "
     << result.best_epoch << "); 1556-column stand-in trained cleanly";
  return {test_nll <= 0.40 ? Outcome::pass : Outcome::fail, ss.str()};
}

// ---------------------------------------------------------------- 6 ---
// One full two-site sweep must cost at least 5x one scaled full-batch
// update at N = 100, R = 8, D = 2, batch 32, single-threaded.
CriterionResult criterion_6() {
  const BenchResult lsf = bench_update(BenchMethod::scaled_sgd, 100, 8, 2, 32, 15, 606);
  const BenchResult dmrg = bench_update(BenchMethod::dmrg, 100, 8, 2, 32, 15, 607);
  const double ratio = dmrg.latency_ms_p50 / lsf.latency_ms_p50;
  std::ostringstream ss;
  ss << "dmrg p50 " << dmrg.latency_ms_p50 << " ms vs scaled p50 " << lsf.latency_ms_p50
     << " ms: ratio " << ratio << " (threshold 5)";
  return {ratio >= 5.0 ? Outcome::pass : Outcome::fail, ss.str()};
}

// ---------------------------------------------------------------- 7 ---
// Instrumented transient bytes at D = 1024, N = 5, R = 2: the two-site
// path must allocate at least 10x the scaled path's peak.
CriterionResult criterion_7() {
  const BenchResult lsf = bench_update(BenchMethod::scaled_sgd, 5, 2, 1024, 32, 1, 707);
  const BenchResult dmrg = bench_update(BenchMethod::dmrg, 5, 2, 1024, 32, 1, 708);
  const double ratio =
      static_cast<double>(dmrg.peak_bytes) / static_cast<double>(lsf.peak_bytes);
  std::ostringstream ss;
  ss << "dmrg peak " << dmrg.peak_bytes << " bytes vs scaled peak " << lsf.peak_bytes
     << " bytes: ratio " << ratio << " (threshold 10)";
  return {ratio >= 10.0 ? Outcome::pass : Outcome::fail, ss.str()};
}

// ---------------------------------------------------------------- 8 ---
// 1e5 forward samples within TV 0.01 of the enumerated joint of an N = 4
// teacher; 1e5 backward samples within TV 0.015.
CriterionResult criterion_8() {
  Rng model_rng(808);
  std::vector<int> dims(4, 2);
  const MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 3, model_rng);
  const EnumeratedJoint joint = enumerate_joint(model);

  const auto tv_of = [&](const std::vector<Assignment>& draws) {
    std::vector<double> counts(joint.mass.size(), 0.0);
    for (const auto& y : draws) counts[joint.index(y)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      tv += std::fabs(counts[i] / static_cast<double>(draws.size()) - joint.mass[i] / joint.z);
    return 0.5 * tv;
  };

  Rng fwd_rng(809);
  const double tv_fwd = tv_of(sample(model, fwd_rng, 100000));
  Rng bwd_rng(810);
  const double tv_bwd = tv_of(sample_backward(model, bwd_rng, 100000));

  std::ostringstream ss;
  ss << "forward TV " << tv_fwd << " (threshold 0.01), backward TV " << tv_bwd
     << " (threshold 0.015)";
  if (tv_fwd > 0.01 || tv_bwd > 0.015) return {Outcome::fail, ss.str()};
  return {Outcome::pass, ss.str()};
}

// ---------------------------------------------------------------- 9 ---
// Desk-scale MNIST proxy: 4000-sample subset, R = 16, sigma_exp, 10
// epochs; test NLL per pixel <= 0.25 nats and strictly better than the
// product-of-Bernoulli-marginals baseline from the same subset.
CriterionResult criterion_9() {
  const fs::path train_images = data_dir() / "train-images-idx3-ubyte";
  const fs::path train_labels = data_dir() / "train-labels-idx1-ubyte";
  const fs::path test_images = data_dir() / "t10k-images-idx3-ubyte";
  const fs::path test_labels = data_dir() / "t10k-labels-idx1-ubyte";
  if (!fs::exists(train_images) || !fs::exists(train_labels) || !fs::exists(test_images) ||
      !fs::exists(test_labels))
    return {Outcome::skip, "MNIST IDX files not found under " + data_dir().string() +
                               " (see README: fetching MNIST)"};

  const DiscreteDataset train_full =
      load_mnist_binarized(train_images, train_labels, 128, SplitTag::train);
  const DiscreteDataset test_full =
      load_mnist_binarized(test_images, test_labels, 128, SplitTag::test);
  const DiscreteDataset train_data = train_full.head(4000);
  const DiscreteDataset test_data = test_full.head(1000);
  const std::size_t pixels = train_data.columns();

  // Laplace-smoothed independent-pixel baseline from the same subset.
  std::vector<double> p1(pixels, 0.0);
  for (std::size_t r = 0; r < train_data.rows(); ++r) {
    const auto row = train_data.row(r);
    for (std::size_t c = 0; c < pixels; ++c) p1[c] += row[c];
  }
  for (double& p : p1) p = (p + 1.0) / (static_cast<double>(train_data.rows()) + 2.0);
  double baseline = 0.0;
  for (std::size_t r = 0; r < test_data.rows(); ++r) {
    const auto row = test_data.row(r);
    for (std::size_t c = 0; c < pixels; ++c)
      baseline -= std::log(row[c] ? p1[c] : 1.0 - p1[c]);
  }
  baseline /= static_cast<double>(test_data.rows() * pixels);

  Rng rng(909);
  MpsModel model =
      MpsModel::random(PositivityMode::sigma_exp, train_data.cardinalities(), 16, rng);
  TrainConfig config;
  config.learning_rate = 5e-3;
  config.batch_size = 32;
  config.epochs = 10;
  config.seed = 0;
  config.optimizer = OptimizerKind::adam;
  const auto result = train(std::move(model), train_data, nullptr, config);
  if (result.failure_iteration)
    return {Outcome::fail, "MNIST training failed at iteration " +
                               std::to_string(*result.failure_iteration)};
  const double test_nll =
      nll(result.model, test_data.view()).mean_nll / static_cast<double>(pixels);
  std::ostringstream ss;
  ss << "test NLL/pixel " << test_nll << " (threshold 0.25), Bernoulli baseline " << baseline;
  if (test_nll <= 0.25 && test_nll < baseline) return {Outcome::pass, ss.str()};
  return {Outcome::fail, ss.str()};
}

// --------------------------------------------------------------- 10 ---
// Two-site internals: isometry <= 1e-8 after every update, gauge
// invariance of log Z and log p under canonicalization <= 1e-8, and the
// sigma-mode rejection.
CriterionResult criterion_10() {
  {
    Rng rng(1010);
    std::vector<int> dims(8, 2);
    MpsModel model = MpsModel::random(PositivityMode::born, dims, 4, rng);
    const DiscreteDataset data = bernoulli_dataset(128, 8, 1011);
    DmrgConfig config;
    config.learning_rate = 0.02;
    config.max_rank = 4;
    config.epochs = 2;
    config.batch_size = 32;
    double worst = 0.0;
    const auto result = dmrg_train(
        std::move(model), data, nullptr, config, {},
        [&](const MpsModel& m, std::size_t position, SweepDirection direction) {
          const double err = direction == SweepDirection::left_to_right
                                 ? left_isometry_error(m.core(position))
                                 : right_isometry_error(m.core(position + 1));
          worst = std::max(worst, err);
        });
    if (result.failure_update)
      return {Outcome::fail, "two-site training failed unexpectedly"};
    if (worst > 1e-8) {
      std::ostringstream ss;
      ss << "isometry error " << worst << " exceeds 1e-8";
      return {Outcome::fail, ss.str()};
    }
  }

  {
    Rng rng(1012);
    std::vector<int> dims(8, 2);
    MpsModel model = MpsModel::random(PositivityMode::born, dims, 4, rng);
    const double lz_before = log_z_born(model);
    std::vector<std::vector<int>> probes;
    for (int k = 0; k < 5; ++k) {
      std::vector<int> y(8);
      for (auto& v : y) v = static_cast<int>(rng.uniform_index(2));
      probes.push_back(std::move(y));
    }
    std::vector<double> lp_before;
    for (const auto& y : probes) lp_before.push_back(log_p_born(model, y));
    canonicalize_right(model);
    const double lz_after = log_z_born(model);
    if (std::fabs(lz_after - lz_before) > 1e-8)
      return {Outcome::fail, "log Z moved under canonicalization"};
    for (std::size_t k = 0; k < probes.size(); ++k)
      if (std::fabs(log_p_born(model, probes[k]) - lp_before[k]) > 1e-8)
        return {Outcome::fail, "log p moved under canonicalization"};
  }

  {
    Rng rng(1013);
    std::vector<int> dims(4, 2);
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, rng);
    DmrgConfig config;
    bool rejected = false;
    try {
      DmrgSweeper sweeper(model, config);
    } catch (const config_error& e) {
      rejected = std::string(e.what()).find("different optimization problem") !=
                 std::string::npos;
    }
    if (!rejected)
      return {Outcome::fail, "sigma-mode two-site training was not rejected with the "
                             "split-incompatibility error"};
  }
  return {Outcome::pass,
          "isometry <= 1e-8 after every update; canonicalization gauge-exact; sigma rejected"};
}

using CriterionFn = std::function<CriterionResult()>;

const std::vector<std::pair<std::string, CriterionFn>>& criteria() {
  static const std::vector<std::pair<std::string, CriterionFn>> table = {
      {"oracle equivalence (log Z, log p, conditionals, marginals)", criterion_1},
      {"gradient exactness vs central finite differences", criterion_2},
      {"stability: scaled SGD to 10k cores, naive overflow onset", criterion_3},
      {"Monte-Carlo growth slopes of the two model families", criterion_4},
      {"density-estimation benchmark (nltcs) and wide stand-in", criterion_5},
      {"latency ratio: two-site sweep vs scaled update", criterion_6},
      {"memory ratio: two-site sweep vs scaled update", criterion_7},
      {"forward/backward sampling against the enumerated joint", criterion_8},
      {"MNIST desk-scale proxy", criterion_9},
      {"two-site invariants: isometry, gauge, sigma rejection", criterion_10},
  };
  return table;
}

int run_one(std::size_t index) {
  const auto& [name, fn] = criteria()[index];
  const auto start = std::chrono::steady_clock::now();
  CriterionResult result;
  try {
    result = fn();
  } catch (const std::exception& e) {
    result = {Outcome::fail, std::string("unexpected exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* label = result.outcome == Outcome::pass   ? "PASS"
                      : result.outcome == Outcome::fail ? "FAIL"
                                                        : "SKIP";
  std::cout << "[" << label << "] criterion " << index + 1 << ": " << name << " -- "
            << result.detail << " (" << secs << " s)" << std::endl;
  return result.outcome == Outcome::pass ? 0 : result.outcome == Outcome::skip ? 77 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::cerr << "usage: ptn_acceptance [criterion 1-10]\n";
    return 2;
  }
  if (argc == 2) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > 10) {
      std::cerr << "criterion must be in 1..10\n";
      return 2;
    }
    return run_one(static_cast<std::size_t>(k - 1));
  }

  int failures = 0;
  int skips = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    const int rc = run_one(i);
    if (rc == 1) ++failures;
    if (rc == 77) ++skips;
  }
  std::cout << criteria().size() - failures - skips << " passed, " << failures << " failed, "
            << skips << " skipped" << std::endl;
  return failures > 0 ? 1 : 0;
}
