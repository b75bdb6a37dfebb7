#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptn/model.hpp"

namespace ptn {

// Non-owning view over K samples, each a row of N symbols, stored
// row-major and contiguous.
class SampleView {
 public:
  SampleView() = default;
  SampleView(const int* data, std::size_t count, std::size_t width)
      : data_(data), count_(count), width_(width) {}

  static SampleView single(std::span<const int> row) {
    return SampleView(row.data(), 1, row.size());
  }

  std::size_t count() const noexcept { return count_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const int> row(std::size_t k) const noexcept {
    return {data_ + k * width_, width_};
  }

 private:
  const int* data_ = nullptr;
  std::size_t count_ = 0;
  std::size_t width_ = 0;
};

// Normalized evaluation of one sample. log_p is the natural log of the
// model probability, nll = -log_p = log_z - (unnormalized log mass);
// mass never exceeds Z, so nll >= 0 up to roundoff.
struct EvalResult {
  double log_p = 0.0;
  double log_z = 0.0;
  double nll = 0.0;
};

// log Psi_sigma(y): unnormalized log mass of a sigma-mode model,
// computed through the scaled chain so it stays finite at any length.
double log_p_sigma(const MpsModel& model, std::span<const int> y);

// log Z of a sigma-mode model via the marginalized-core chain.
double log_z_sigma(const MpsModel& model);

// log Psi(y)^2 = 2 log |Psi(y)|: unnormalized log mass of a born model,
// via a signed scaled chain over raw slices.
double log_p_born(const MpsModel& model, std::span<const int> y);

// log Z of a born model via the doubled (transfer) chain; the transfer
// step is realized as two rank-R contractions per symbol, never as a
// materialized R^2 x R^2 matrix.
double log_z_born(const MpsModel& model);

// Mode dispatch for the two functions above.
double log_mass(const MpsModel& model, std::span<const int> y);
double log_normalizer(const MpsModel& model);

struct BatchEval {
  double mean_nll = 0.0;
  double log_z = 0.0;
  std::vector<EvalResult> per_sample;
};

// Mean NLL over a batch. log Z is computed once and shared across the
// batch. A zero-mass sample raises zero_amplitude_error carrying its
// index. threads > 1 evaluates samples concurrently over the read-only
// model; results land in per-sample slots and the reduction order is
// fixed, so the output is identical to the sequential path.
BatchEval nll(const MpsModel& model, SampleView batch, unsigned threads = 1);

// Unscaled normalization constant (marginalized chain for sigma modes,
// doubled chain for born), in plain doubles. Overflows on long chains by
// design; this is the reference/demonstration path, not the evaluator.
double naive_z(const MpsModel& model);

// log naive_z - mean log (unscaled mass): the loss of the unstable
// training path. Returns non-finite values instead of throwing once the
// contraction leaves the double range.
double naive_loss(const MpsModel& model, SampleView batch);

}  // namespace ptn
