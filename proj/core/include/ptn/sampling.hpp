#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "ptn/model.hpp"
#include "ptn/rng.hpp"

namespace ptn {

using Assignment = std::vector<int>;
using PartialAssignment = std::map<std::size_t, int>;

// A conditional query: fixed symbols plus an ordered list of positions
// to sample, everything else marginalized. Positions are 0-based; the
// two sets must be disjoint and in range.
struct QuerySpec {
  PartialAssignment conditioned;
  std::vector<std::size_t> targets;

  void validate(const MpsModel& model) const;
};

// Ancestral sampling machinery with precomputed suffix/prefix
// environments (marginalized-core products for sigma modes, doubled
// transfer environments for born), so one full sample costs O(N D R^2).
class Sampler {
 public:
  explicit Sampler(const MpsModel& model);  // keeps a reference

  // p(y_n | y_0 .. y_{n-1}) for n = prefix.size(): a length-D_n vector,
  // non-negative, summing to one. Normalization happens through a
  // log-sum-exp over the candidate numerators. Throws
  // zero_amplitude_error on a zero-probability prefix.
  std::vector<double> conditional(std::span<const int> prefix) const;

  Assignment sample_one(Rng& rng) const;           // positions 0 .. N-1
  Assignment sample_one_backward(Rng& rng) const;  // positions N-1 .. 0

 private:
  std::vector<double> weights_sigma(const double* left_unit, std::size_t n,
                                    const double* right_unit) const;
  std::vector<double> weights_born_forward(const double* left_unit, std::size_t n) const;
  std::vector<double> weights_born_backward(std::size_t n, const double* right_unit) const;

  const MpsModel* model_;
  bool born_;
  std::vector<std::vector<double>> mapped_;     // positivity-mapped cores (sigma modes)
  std::vector<std::vector<double>> gdot_;       // marginalized matrices (sigma modes)
  std::vector<std::vector<double>> right_vec_;  // unit suffix rows of gdot products
  std::vector<std::vector<double>> left_vec_;   // unit prefix rows of gdot products
  std::vector<std::vector<double>> right_psd_;  // unit-Frobenius suffix transfer envs (born)
  std::vector<std::vector<double>> left_psd_;   // unit-Frobenius prefix transfer envs (born)
};

// One-shot conveniences over a transient Sampler.
std::vector<double> conditional_dist(const MpsModel& model, std::span<const int> prefix);
std::vector<Assignment> sample(const MpsModel& model, Rng& rng, std::size_t count);
std::vector<Assignment> sample_backward(const MpsModel& model, Rng& rng, std::size_t count);

// Normalized log marginal log p(y_S) of a partial assignment; the empty
// assignment gives 0. Returns -inf for a zero-mass marginal.
double log_marginal(const MpsModel& model, const PartialAssignment& given);

// Draws the query's target positions in the given order, conditioning on
// the fixed symbols and marginalizing all remaining positions. Returns
// the sampled target symbols.
PartialAssignment sample_query(const MpsModel& model, const QuerySpec& query, Rng& rng);

}  // namespace ptn
