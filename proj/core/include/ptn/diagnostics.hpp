#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptn/model.hpp"
#include "ptn/train.hpp"

namespace ptn {

// One point of a chain-growth curve: chain length against a log-space
// statistic over random models.
struct GrowthPoint {
  std::size_t n_cores = 0;
  double value = 0.0;
};

struct GrowthCurve {
  std::string statistic;  // "mean_log_z" or "log_mean_psi_sq"
  std::vector<GrowthPoint> points;
};

// Least-squares slope of value against n_cores.
double fitted_slope(const GrowthCurve& curve);

// Monte-Carlo growth of random unit-variance models as the chain gets
// longer, computed entirely in log space so the measuring instrument
// itself cannot overflow. sigma modes report the mean of log Z; born
// reports the log of the Monte-Carlo mean of Psi^2 evaluated at a fixed
// assignment (a variance estimate, since E[Psi] = 0), combined with a
// log-sum-exp over trials.
GrowthCurve mc_growth(PositivityMode mode, std::span<const std::size_t> n_values,
                      std::size_t rank, int dim, std::size_t trials, std::uint64_t seed);

struct InstabilityReport {
  std::size_t n_cores = 0;
  std::uint64_t max_iterations_reached = 0;
  double instability_value = 0.0;  // max_iterations_reached - budget + 0.1
};

struct OnsetConfig {
  std::size_t rank = 2;
  int dim = 2;
  std::size_t batch_size = 32;
  double learning_rate = 5e-3;
  double init_std = 1.0;
  std::size_t dataset_rows = 256;
  std::uint64_t seed = 0;
};

// Trains fresh random models of each length with the given method until
// the iteration budget or the first non-finite loss/gradient, whichever
// comes first. Failure is the measurement, not an error.
std::vector<InstabilityReport> overflow_onset(TrainMethod method, PositivityMode mode,
                                              std::span<const std::size_t> n_values,
                                              std::uint64_t budget, const OnsetConfig& config);

enum class BenchMethod { scaled_sgd, dmrg };
const char* to_string(BenchMethod method) noexcept;

struct BenchResult {
  BenchMethod method = BenchMethod::scaled_sgd;
  std::size_t n_cores = 0;
  std::size_t rank = 0;
  int dim = 0;
  std::size_t batch = 0;
  std::size_t repetitions = 0;
  double latency_ms_p50 = 0.0;
  double latency_ms_p90 = 0.0;
  std::size_t peak_bytes = 0;
  std::uint64_t iterations_reached = 0;
};

// Wall time and instrumented transient bytes of one full-parameter
// update: a batch gradient step for scaled_sgd, a full two-site sweep
// for dmrg. Single-threaded; repetitions must be positive.
BenchResult bench_update(BenchMethod method, std::size_t n_cores, std::size_t rank, int dim,
                         std::size_t batch, std::size_t repetitions, std::uint64_t seed);

// CSV rows keyed by (method, N, R, D) with latency percentiles, peak
// bytes and iterations reached; shared by the bench and overflow grids.
void write_bench_csv_header(std::ostream& out);
void write_bench_csv_row(std::ostream& out, const BenchResult& row);

// Growth curves go to their own CSV shape (n_cores, statistic value).
void write_growth_csv(std::ostream& out, const std::string& label, const GrowthCurve& curve);

}  // namespace ptn
