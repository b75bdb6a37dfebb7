#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "ptn/model.hpp"

namespace ptn {

// The full joint table of a small model, built by brute-force
// enumeration. Exists to be slow and right: every fast path in this
// library is checked against it at small N.
struct EnumeratedJoint {
  std::vector<int> dims;
  std::vector<double> mass;  // unnormalized, row-major over assignments
  double z = 0.0;            // Kahan-compensated sum of mass

  std::size_t index(std::span<const int> y) const;
  double probability(std::span<const int> y) const;  // mass / z
  std::vector<int> assignment(std::size_t index) const;
};

// Enumerates every assignment through psi_raw. Masses are Psi (sigma
// modes) or Psi^2 (born). Guarded: the table may not exceed 2^20
// entries.
EnumeratedJoint enumerate_joint(const MpsModel& model);

// Exact conditional p(y_n | y_0..y_{n-1}) by summation over the table;
// n must equal prefix.size(). Throws zero_amplitude_error on a zero-mass
// prefix.
std::vector<double> oracle_conditional(const EnumeratedJoint& joint,
                                       std::span<const int> prefix);

// Exact normalized log marginal of a partial assignment.
double oracle_log_marginal(const EnumeratedJoint& joint, const std::map<std::size_t, int>& given);

}  // namespace ptn
