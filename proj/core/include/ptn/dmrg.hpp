#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ptn/alloc_meter.hpp"
#include "ptn/data.hpp"
#include "ptn/metrics.hpp"
#include "ptn/model.hpp"

namespace ptn {

// Fourth-order contraction of neighboring cores n, n+1 over their shared
// bond; shape (R_n, D_n, D_{n+1}, R_{n+2}). Materializing this object is
// what makes two-site sweeps memory-hungry.
struct MergedTensor {
  std::size_t left = 0, d1 = 0, d2 = 0, right = 0;
  std::vector<double> data;  // index ((a*d1 + y1)*d2 + y2)*right + b

  MergedTensor() = default;
  MergedTensor(std::size_t left_, std::size_t d1_, std::size_t d2_, std::size_t right_)
      : left(left_), d1(d1_), d2(d2_), right(right_), data(left_ * d1_ * d2_ * right_, 0.0) {}

  double& at(std::size_t a, std::size_t y1, std::size_t y2, std::size_t b) noexcept {
    return data[((a * d1 + y1) * d2 + y2) * right + b];
  }
  double at(std::size_t a, std::size_t y1, std::size_t y2, std::size_t b) const noexcept {
    return data[((a * d1 + y1) * d2 + y2) * right + b];
  }
  std::size_t bytes() const noexcept { return data.size() * sizeof(double); }
};

MergedTensor merge(const MpsModel& model, std::size_t n);

enum class SweepDirection { left_to_right, right_to_left };

// Splits a merged tensor back into two cores by truncated SVD of its
// (R_n D_n) x (D_{n+1} R_{n+2}) unfolding. Singular values below
// cutoff * s_max are dropped and the retained count is capped at
// max_rank (at least one is always kept). The sweep direction decides
// which side keeps the isometry. Returns the retained rank;
// discarded_sq, when given, receives the dropped squared singular mass.
std::size_t split_merged(const MergedTensor& merged, SweepDirection direction,
                         std::size_t max_rank, double cutoff, Core& left_out, Core& right_out,
                         double* discarded_sq = nullptr);

// Gauge transform bringing cores 1..N-1 to right-canonical form. Only
// meaningful for born models, where gauge moves between raw cores leave
// the distribution invariant; sigma modes are rejected.
void canonicalize_right(MpsModel& model);

// Frobenius deviation of the core's canonical Gram matrix from identity.
double left_isometry_error(const Core& core);
double right_isometry_error(const Core& core);

struct DmrgConfig {
  double learning_rate = 0.05;
  std::size_t max_rank = 32;
  double cutoff = 0.0;  // relative to the largest singular value
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

using UpdateCallback =
    std::function<void(const MpsModel& model, std::size_t position, SweepDirection direction)>;

// Runs alternating full sweeps, one sweep per mini-batch. Owns the
// per-batch environment caches (the bookkeeping that makes two-site
// sweeps fiddly lives entirely in here).
class DmrgSweeper {
 public:
  // Canonicalizes the model to the right on construction. Throws
  // config_error for sigma-mode models.
  DmrgSweeper(MpsModel& model, const DmrgConfig& config, AllocationMeter* meter = nullptr);

  // One full sweep over the batch in the pending direction (directions
  // alternate automatically, starting left-to-right). Returns the mean
  // batch NLL per variable seen across the sweep's updates.
  double sweep(SampleView batch, const UpdateCallback& on_update = {});

  std::uint64_t updates_completed() const noexcept { return updates_; }
  std::optional<std::uint64_t> failure_update() const noexcept { return failure_; }
  std::size_t peak_merged_bytes() const noexcept { return peak_merged_bytes_; }

 private:
  struct ScaledRows;
  double sweep_impl(SampleView batch, const UpdateCallback& on_update);

  MpsModel* model_;
  DmrgConfig config_;
  AllocationMeter* meter_;
  SweepDirection next_direction_ = SweepDirection::left_to_right;
  std::uint64_t updates_ = 0;
  std::optional<std::uint64_t> failure_;
  std::size_t peak_merged_bytes_ = 0;
};

struct DmrgResult {
  MpsModel model;
  std::vector<LogRow> log;
  std::size_t peak_transient_bytes = 0;
  std::optional<std::uint64_t> failure_update;
  std::uint64_t updates_completed = 0;
};

// Mini-batch two-site training: each epoch shuffles the data and runs
// one full sweep per batch. Emits the same log rows as the SGD trainer
// plus the peak merged-tensor bytes seen in the epoch.
DmrgResult dmrg_train(MpsModel model, const DiscreteDataset& data,
                      const DiscreteDataset* validation, const DmrgConfig& config,
                      const EpochCallback& on_row = {}, const UpdateCallback& on_update = {},
                      AllocationMeter* meter = nullptr);

}  // namespace ptn
