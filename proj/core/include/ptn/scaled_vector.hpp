#pragma once

#include <cstddef>
#include <vector>

#include "ptn/matrix.hpp"

namespace ptn {

// A row vector kept at unit L2 norm, with the factored-out magnitude
// accumulated as a running sum of log scale factors. Absorbing a matrix
// maps (v, s) to (v M / ||v M||, s + log ||v M||), so chain products of
// arbitrary length never leave the representable double range.
struct ScaledVector {
  std::vector<double> v;
  double log_scale = 0.0;

  // The 1-dimensional chain start: v = [1], log_scale = 0.
  static ScaledVector boundary() { return ScaledVector{{1.0}, 0.0}; }

  std::size_t size() const noexcept { return v.size(); }

  // Log magnitude of the represented scalar; only meaningful once the
  // chain has collapsed back to dimension one (|v[0]| is then 1 up to
  // roundoff, so this is just log_scale plus a tiny correction).
  double log_abs() const;

  // Sign of the represented scalar (size-1 state). Always +1 on the
  // non-negative chains; tracks amplitude sign on born chains.
  double sign() const;
};

// state <- (state.v * m, renormalized). A zero product raises
// zero_amplitude_error carrying `position`.
void scaled_absorb(ScaledVector& state, const Matrix& m, std::size_t position = 0);

}  // namespace ptn
