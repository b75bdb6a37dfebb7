#include "ptn/scaled_vector.hpp"

#include <cmath>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"

namespace ptn {

double ScaledVector::log_abs() const {
  if (v.size() != 1) throw shape_error("ScaledVector::log_abs: chain has not collapsed to a scalar");
  return log_scale + std::log(std::fabs(v[0]));
}

double ScaledVector::sign() const {
  if (v.size() != 1) throw shape_error("ScaledVector::sign: chain has not collapsed to a scalar");
  return v[0] < 0.0 ? -1.0 : 1.0;
}

void scaled_absorb(ScaledVector& state, const Matrix& m, std::size_t position) {
  if (state.v.size() != m.rows())
    throw shape_error("scaled_absorb: vector length " + std::to_string(state.v.size()) +
                      " does not match matrix rows " + std::to_string(m.rows()));
  std::vector<double> w(m.cols(), 0.0);
  const double* md = m.data().data();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = state.v[i];
    if (vi == 0.0) continue;
    const double* row = md + i * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) w[j] += vi * row[j];
  }
  const double gamma = detail::normalize_l2(w.data(), w.size());
  if (gamma == 0.0) throw zero_amplitude_error(position);
  state.v = std::move(w);
  state.log_scale += std::log(gamma);
}

}  // namespace ptn
