#pragma once

#include <cstddef>
#include <vector>

#include "ptn/alloc_meter.hpp"
#include "ptn/eval.hpp"
#include "ptn/model.hpp"

namespace ptn {

// Per-core gradient arrays, shape-matched to a model's cores.
struct GradientSet {
  std::vector<std::vector<double>> cores;

  static GradientSet zeros_like(const MpsModel& model);

  bool all_finite() const noexcept;
  double squared_norm() const noexcept;
  void scale(double factor) noexcept;
};

struct LossAndGrad {
  double loss = 0.0;  // mean NLL over the batch
  double log_z = 0.0;
  GradientSet grads;
};

// Exact gradient of the batch NLL with respect to the raw core
// parameters. Forward states are the scaled chain vectors; the backward
// pass treats the scale factors as constants, which is exact because the
// factored-out logs cancel identically in the loss. The log Z part is
// sample-independent and computed once per batch.
LossAndGrad grad_nll(const MpsModel& model, SampleView batch, AllocationMeter* meter = nullptr);

// The same loss surface through unscaled contractions, in plain doubles.
// Loss and gradients go non-finite once a chain leaves the double range;
// no attempt is made to rescue them. This is the demonstration path for
// the overflow experiments.
LossAndGrad grad_nll_naive(const MpsModel& model, SampleView batch);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_core = 0;
  std::size_t worst_index = 0;  // flat index within the core
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference verification of grad_nll over every coordinate.
// h must be positive.
GradCheckReport grad_check(const MpsModel& model, SampleView batch, double h);

}  // namespace ptn
