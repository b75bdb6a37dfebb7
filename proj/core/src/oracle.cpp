#include "ptn/oracle.hpp"

#include <cmath>
#include <string>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"

namespace ptn {

namespace {
constexpr std::size_t kMaxTableSize = std::size_t{1} << 20;
}

std::size_t EnumeratedJoint::index(std::span<const int> y) const {
  if (y.size() != dims.size()) throw shape_error("EnumeratedJoint: assignment length mismatch");
  std::size_t idx = 0;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (y[n] < 0 || y[n] >= dims[n])
      throw index_error("EnumeratedJoint: symbol out of range at position " + std::to_string(n));
    idx = idx * static_cast<std::size_t>(dims[n]) + static_cast<std::size_t>(y[n]);
  }
  return idx;
}

double EnumeratedJoint::probability(std::span<const int> y) const { return mass[index(y)] / z; }

std::vector<int> EnumeratedJoint::assignment(std::size_t index) const {
  std::vector<int> y(dims.size());
  for (std::size_t n = dims.size(); n-- > 0;) {
    y[n] = static_cast<int>(index % static_cast<std::size_t>(dims[n]));
    index /= static_cast<std::size_t>(dims[n]);
  }
  return y;
}

EnumeratedJoint enumerate_joint(const MpsModel& model) {
  std::size_t total = 1;
  for (std::size_t n = 0; n < model.length(); ++n) {
    total *= static_cast<std::size_t>(model.dim(n));
    if (total > kMaxTableSize)
      throw argument_error("enumerate_joint: joint table exceeds the 2^20 size guard");
  }
  EnumeratedJoint joint;
  joint.dims = model.dims();
  joint.mass.resize(total);
  const bool born = !uses_sigma(model.mode());

  std::vector<int> y(model.length(), 0);
  detail::KahanSum zsum;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const double psi = model.psi_raw(y);
    const double m = born ? psi * psi : psi;
    joint.mass[idx] = m;
    zsum.add(m);
    // row-major increment
    for (std::size_t n = model.length(); n-- > 0;) {
      if (++y[n] < joint.dims[n]) break;
      y[n] = 0;
    }
  }
  joint.z = zsum.sum;
  return joint;
}

std::vector<double> oracle_conditional(const EnumeratedJoint& joint,
                                       std::span<const int> prefix) {
  const std::size_t n = prefix.size();
  if (n >= joint.dims.size())
    throw index_error("oracle_conditional: prefix covers the whole assignment");
  // With row-major ordering the block of assignments extending a prefix
  // is contiguous.
  std::size_t block = 1;
  for (std::size_t k = n; k < joint.dims.size(); ++k)
    block *= static_cast<std::size_t>(joint.dims[k]);
  std::size_t start = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (prefix[k] < 0 || prefix[k] >= joint.dims[k])
      throw index_error("oracle_conditional: prefix symbol out of range at position " +
                        std::to_string(k));
    start = start * static_cast<std::size_t>(joint.dims[k]) + static_cast<std::size_t>(prefix[k]);
  }
  start *= block;

  const std::size_t d = static_cast<std::size_t>(joint.dims[n]);
  const std::size_t sub = block / d;
  std::vector<double> out(d, 0.0);
  detail::KahanSum total;
  for (std::size_t y = 0; y < d; ++y) {
    detail::KahanSum s;
    const double* base = joint.mass.data() + start + y * sub;
    for (std::size_t i = 0; i < sub; ++i) s.add(base[i]);
    out[y] = s.sum;
    total.add(s.sum);
  }
  if (total.sum <= 0.0) throw zero_amplitude_error(n);
  for (double& x : out) x /= total.sum;
  return out;
}

double oracle_log_marginal(const EnumeratedJoint& joint,
                           const std::map<std::size_t, int>& given) {
  for (const auto& [pos, sym] : given) {
    if (pos >= joint.dims.size())
      throw index_error("oracle_log_marginal: position out of range");
    if (sym < 0 || sym >= joint.dims[pos])
      throw index_error("oracle_log_marginal: symbol out of range");
  }
  detail::KahanSum s;
  for (std::size_t idx = 0; idx < joint.mass.size(); ++idx) {
    const std::vector<int> y = joint.assignment(idx);
    bool match = true;
    for (const auto& [pos, sym] : given)
      if (y[pos] != sym) {
        match = false;
        break;
      }
    if (match) s.add(joint.mass[idx]);
  }
  return std::log(s.sum) - std::log(joint.z);
}

}  // namespace ptn
