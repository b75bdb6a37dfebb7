#include "ptn/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "chain_ops.hpp"
#include "ptn/dmrg.hpp"
#include "ptn/errors.hpp"
#include "ptn/eval.hpp"

namespace ptn {

namespace {

using Clock = std::chrono::steady_clock;

DiscreteDataset random_binary_dataset(std::size_t rows, std::size_t cols, int dim, Rng& rng) {
  std::vector<int> values(rows * cols);
  for (int& v : values)
    v = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dim)));
  std::vector<int> cards(cols, dim);
  return DiscreteDataset(cols, std::move(cards), std::move(values));
}

double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace

double fitted_slope(const GrowthCurve& curve) {
  const std::size_t n = curve.points.size();
  if (n < 2) throw argument_error("fitted_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : curve.points) {
    mx += static_cast<double>(p.n_cores);
    my += p.value;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : curve.points) {
    const double dx = static_cast<double>(p.n_cores) - mx;
    sxx += dx * dx;
    sxy += dx * (p.value - my);
  }
  if (sxx == 0.0) throw argument_error("fitted_slope: degenerate n grid");
  return sxy / sxx;
}

GrowthCurve mc_growth(PositivityMode mode, std::span<const std::size_t> n_values,
                      std::size_t rank, int dim, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw argument_error("mc_growth: need at least 100 trials");
  if (n_values.empty()) throw argument_error("mc_growth: empty n grid");
  const bool born = !uses_sigma(mode);
  GrowthCurve curve;
  curve.statistic = born ? "log_mean_psi_sq" : "mean_log_z";
  Rng rng(seed);
  for (std::size_t n : n_values) {
    if (n == 0) throw argument_error("mc_growth: chain length must be positive");
    std::vector<int> dims(n, dim);
    std::vector<int> fixed_y(n, 0);
    std::vector<double> logs(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      const MpsModel model = MpsModel::random(mode, dims, rank, rng, 1.0);
      logs[t] = born ? log_p_born(model, fixed_y) : log_z_sigma(model);
    }
    double value = 0.0;
    if (born) {
      // log of the trial mean of Psi^2, assembled by log-sum-exp.
      const double m = *std::max_element(logs.begin(), logs.end());
      double acc = 0.0;
      for (double x : logs) acc += std::exp(x - m);
      value = m + std::log(acc) - std::log(static_cast<double>(trials));
    } else {
      detail::KahanSum s;
      for (double x : logs) s.add(x);
      value = s.sum / static_cast<double>(trials);
    }
    curve.points.push_back({n, value});
  }
  return curve;
}

std::vector<InstabilityReport> overflow_onset(TrainMethod method, PositivityMode mode,
                                              std::span<const std::size_t> n_values,
                                              std::uint64_t budget, const OnsetConfig& config) {
  if (budget == 0) throw argument_error("overflow_onset: budget must be positive");
  std::vector<InstabilityReport> reports;
  for (std::size_t n : n_values) {
    Rng rng(config.seed ^ (0x9e3779b97f4a7c15ull * (n + 1)));
    std::vector<int> dims(n, config.dim);
    MpsModel model = MpsModel::random(mode, dims, config.rank, rng, config.init_std);
    DiscreteDataset data = random_binary_dataset(config.dataset_rows, n, config.dim, rng);

    TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.batch_size = config.batch_size;
    tc.epochs = static_cast<std::size_t>(
        budget / std::max<std::uint64_t>(1, data.rows() / config.batch_size) + 2);
    tc.seed = config.seed;
    tc.init_std = config.init_std;

    const TrainResult result =
        train(std::move(model), data, nullptr, tc, method, {}, budget);
    InstabilityReport report;
    report.n_cores = n;
    report.max_iterations_reached = result.iterations_completed;
    report.instability_value = static_cast<double>(result.iterations_completed) -
                               static_cast<double>(budget) + 0.1;
    reports.push_back(report);
  }
  return reports;
}

const char* to_string(BenchMethod method) noexcept {
  return method == BenchMethod::scaled_sgd ? "scaled_sgd" : "dmrg";
}

BenchResult bench_update(BenchMethod method, std::size_t n_cores, std::size_t rank, int dim,
                         std::size_t batch, std::size_t repetitions, std::uint64_t seed) {
  if (repetitions == 0) throw argument_error("bench_update: repetitions must be positive");
  if (n_cores < 2) throw argument_error("bench_update: need at least two cores");

  BenchResult result{method, n_cores, rank, dim, batch, repetitions, 0.0, 0.0, 0, 0};
  Rng rng(seed);
  std::vector<int> dims(n_cores, dim);
  DiscreteDataset data = random_binary_dataset(batch, n_cores, dim, rng);
  std::vector<double> latencies;
  latencies.reserve(repetitions);

  if (method == BenchMethod::scaled_sgd) {
    MpsModel model = MpsModel::random(PositivityMode::sigma_exp, dims, rank, rng);
    TrainConfig tc;
    Optimizer opt(OptimizerKind::sgd, tc.learning_rate);
    AllocationMeter meter;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      const auto start = Clock::now();
      const LossAndGrad lg = grad_nll(model, data.view(), &meter);
      opt.step(model, lg.grads);
      latencies.push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - start).count());
      ++result.iterations_reached;
    }
    result.peak_bytes = meter.peak;
  } else {
    MpsModel model = MpsModel::random(PositivityMode::born, dims, rank, rng);
    DmrgConfig dc;
    dc.max_rank = rank;
    dc.learning_rate = 0.02;
    AllocationMeter meter;
    DmrgSweeper sweeper(model, dc, &meter);
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      const auto start = Clock::now();
      sweeper.sweep(data.view());
      latencies.push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - start).count());
      if (sweeper.failure_update()) break;
      ++result.iterations_reached;
    }
    result.peak_bytes = meter.peak;
  }

  result.latency_ms_p50 = percentile(latencies, 0.5);
  result.latency_ms_p90 = percentile(latencies, 0.9);
  return result;
}

void write_bench_csv_header(std::ostream& out) {
  out << "method,n_cores,rank,input_dim,batch,repetitions,latency_ms_p50,latency_ms_p90,"
         "peak_bytes,iterations_reached\n";
}

void write_bench_csv_row(std::ostream& out, const BenchResult& row) {
  out << to_string(row.method) << ',' << row.n_cores << ',' << row.rank << ',' << row.dim << ','
      << row.batch << ',' << row.repetitions << ',' << row.latency_ms_p50 << ','
      << row.latency_ms_p90 << ',' << row.peak_bytes << ',' << row.iterations_reached << '\n';
}

void write_growth_csv(std::ostream& out, const std::string& label, const GrowthCurve& curve) {
  out << "label,statistic,n_cores,value\n";
  for (const auto& p : curve.points)
    out << label << ',' << curve.statistic << ',' << p.n_cores << ',' << p.value << '\n';
}

}  // namespace ptn
