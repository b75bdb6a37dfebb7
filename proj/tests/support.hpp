#pragma once

// Shared helpers for the test suites.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ptn/data.hpp"
#include "ptn/eval.hpp"
#include "ptn/model.hpp"
#include "ptn/oracle.hpp"
#include "ptn/rng.hpp"

namespace test_support {

inline constexpr ptn::PositivityMode kAllModes[] = {
    ptn::PositivityMode::born, ptn::PositivityMode::sigma_exp, ptn::PositivityMode::sigma_abs,
    ptn::PositivityMode::sigma_sq, ptn::PositivityMode::sigma_softplus};

// Random model with heterogeneous cardinalities in [1, max_dim] and the
// given interior rank.
inline ptn::MpsModel random_model(ptn::PositivityMode mode, std::size_t n, int max_dim,
                                  std::size_t rank, ptn::Rng& rng, double init_std = 0.0) {
  std::vector<int> dims(n);
  for (auto& d : dims) d = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(max_dim)));
  return ptn::MpsModel::random(mode, dims, rank, rng, init_std);
}

// Cores all equal to `value`.
inline ptn::MpsModel constant_model(ptn::PositivityMode mode, std::size_t n, int dim,
                                    std::size_t rank, double value) {
  std::vector<ptn::Core> cores;
  for (std::size_t i = 0; i < n; ++i) {
    ptn::Core c(i == 0 ? 1 : rank, static_cast<std::size_t>(dim), i + 1 == n ? 1 : rank);
    for (double& x : c.data) x = value;
    cores.push_back(std::move(c));
  }
  return ptn::MpsModel(std::move(cores), mode);
}

inline std::vector<int> random_assignment(const ptn::MpsModel& model, ptn::Rng& rng) {
  std::vector<int> y(model.length());
  for (std::size_t n = 0; n < y.size(); ++n)
    y[n] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(model.dim(n))));
  return y;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Total variation distance between an empirical sample set and an
// enumerated joint.
inline double tv_against_joint(const ptn::EnumeratedJoint& joint,
                               const std::vector<std::vector<int>>& samples) {
  std::vector<double> counts(joint.mass.size(), 0.0);
  for (const auto& y : samples) counts[joint.index(y)] += 1.0;
  const double total = static_cast<double>(samples.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    tv += std::fabs(counts[i] / total - joint.mass[i] / joint.z);
  return 0.5 * tv;
}

inline ptn::DiscreteDataset dataset_from_assignments(const std::vector<std::vector<int>>& rows,
                                                     const ptn::MpsModel& model) {
  const auto dims = model.dims();
  return ptn::DiscreteDataset::from_rows(rows, dims);
}

}  // namespace test_support
