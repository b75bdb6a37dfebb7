#include "ptn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptn/errors.hpp"

namespace ptn {

const char* to_string(PositivityMode mode) noexcept {
  switch (mode) {
    case PositivityMode::born:
      return "born";
    case PositivityMode::sigma_exp:
      return "sigma_exp";
    case PositivityMode::sigma_abs:
      return "sigma_abs";
    case PositivityMode::sigma_sq:
      return "sigma_sq";
    case PositivityMode::sigma_softplus:
      return "sigma_softplus";
  }
  return "?";
}

std::optional<PositivityMode> parse_positivity_mode(std::string_view name) noexcept {
  if (name == "born") return PositivityMode::born;
  if (name == "sigma_exp") return PositivityMode::sigma_exp;
  if (name == "sigma_abs") return PositivityMode::sigma_abs;
  if (name == "sigma_sq") return PositivityMode::sigma_sq;
  if (name == "sigma_softplus") return PositivityMode::sigma_softplus;
  return std::nullopt;
}

MpsModel::MpsModel(std::vector<Core> cores, PositivityMode mode)
    : cores_(std::move(cores)), mode_(mode) {
  if (cores_.empty()) throw shape_error("MpsModel: at least one core required");
  if (cores_.front().left != 1 || cores_.back().right != 1)
    throw shape_error("MpsModel: boundary ranks must be 1");
  for (std::size_t n = 0; n < cores_.size(); ++n) {
    const Core& c = cores_[n];
    if (c.dim == 0 || c.left == 0 || c.right == 0)
      throw shape_error("MpsModel: core " + std::to_string(n) + " has a zero dimension");
    if (c.data.size() != c.left * c.dim * c.right)
      throw shape_error("MpsModel: core " + std::to_string(n) + " data length mismatch");
    if (n + 1 < cores_.size() && c.right != cores_[n + 1].left)
      throw shape_error("MpsModel: bond mismatch between cores " + std::to_string(n) +
                        " and " + std::to_string(n + 1));
    for (double x : c.data)
      if (!std::isfinite(x))
        throw numerical_error("MpsModel: core " + std::to_string(n) +
                              " contains a non-finite parameter");
  }
}

MpsModel MpsModel::random(PositivityMode mode, std::span<const int> dims, std::size_t rank,
                          Rng& rng, double init_std) {
  if (dims.empty()) throw shape_error("MpsModel::random: dims must be non-empty");
  if (rank == 0) throw argument_error("MpsModel::random: rank must be positive");
  for (int d : dims)
    if (d <= 0) throw argument_error("MpsModel::random: cardinalities must be positive");
  const double stddev = init_std > 0.0 ? init_std : 1.0 / std::sqrt(static_cast<double>(rank));
  const std::size_t n = dims.size();
  std::vector<Core> cores;
  cores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t left = i == 0 ? 1 : rank;
    const std::size_t right = i + 1 == n ? 1 : rank;
    Core c(left, static_cast<std::size_t>(dims[i]), right);
    fill_gaussian(rng, c.data, stddev);
    cores.push_back(std::move(c));
  }
  return MpsModel(std::move(cores), mode);
}

int MpsModel::dim(std::size_t n) const {
  if (n >= cores_.size()) throw index_error("dim: position " + std::to_string(n) + " out of range");
  return static_cast<int>(cores_[n].dim);
}

std::size_t MpsModel::rank(std::size_t n) const {
  if (n > cores_.size())
    throw index_error("rank: bond " + std::to_string(n) + " out of range");
  return n == cores_.size() ? cores_.back().right : cores_[n].left;
}

std::vector<int> MpsModel::dims() const {
  std::vector<int> out(cores_.size());
  for (std::size_t i = 0; i < cores_.size(); ++i) out[i] = static_cast<int>(cores_[i].dim);
  return out;
}

std::vector<std::size_t> MpsModel::ranks() const {
  std::vector<std::size_t> out(cores_.size() + 1);
  for (std::size_t i = 0; i < cores_.size(); ++i) out[i] = cores_[i].left;
  out[cores_.size()] = cores_.back().right;
  return out;
}

std::size_t MpsModel::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const Core& c : cores_) total += c.size();
  return total;
}

std::size_t MpsModel::max_rank() const noexcept {
  std::size_t r = 1;
  for (const Core& c : cores_) r = std::max({r, c.left, c.right});
  return r;
}

std::size_t MpsModel::max_dim() const noexcept {
  std::size_t d = 1;
  for (const Core& c : cores_) d = std::max(d, c.dim);
  return d;
}

const Core& MpsModel::core(std::size_t n) const {
  if (n >= cores_.size())
    throw index_error("core: position " + std::to_string(n) + " out of range");
  return cores_[n];
}

Core& MpsModel::core(std::size_t n) {
  if (n >= cores_.size())
    throw index_error("core: position " + std::to_string(n) + " out of range");
  return cores_[n];
}

Matrix MpsModel::core_slice(std::size_t n, int y) const {
  const Core& c = core(n);
  if (y < 0 || static_cast<std::size_t>(y) >= c.dim)
    throw index_error("core_slice: symbol " + std::to_string(y) + " out of range for position " +
                      std::to_string(n) + " with cardinality " + std::to_string(c.dim));
  Matrix slice(c.left, c.right);
  for (std::size_t i = 0; i < c.left; ++i)
    for (std::size_t j = 0; j < c.right; ++j)
      slice(i, j) = c.at(i, static_cast<std::size_t>(y), j);
  return slice;
}

Matrix MpsModel::marginalized_core(std::size_t n) const {
  const Core& c = core(n);
  Matrix sum(c.left, c.right);
  for (std::size_t i = 0; i < c.left; ++i)
    for (std::size_t y = 0; y < c.dim; ++y)
      for (std::size_t j = 0; j < c.right; ++j)
        sum(i, j) += sigma_value(mode_, c.at(i, y, j));
  return sum;
}

double MpsModel::psi_raw(std::span<const int> y) const {
  if (y.size() != cores_.size())
    throw shape_error("psi_raw: assignment length " + std::to_string(y.size()) +
                      " does not match model length " + std::to_string(cores_.size()));
  std::vector<double> v{1.0};
  std::vector<double> next;
  for (std::size_t n = 0; n < cores_.size(); ++n) {
    const Core& c = cores_[n];
    if (y[n] < 0 || static_cast<std::size_t>(y[n]) >= c.dim)
      throw index_error("psi_raw: symbol out of range at position " + std::to_string(n));
    next.assign(c.right, 0.0);
    for (std::size_t i = 0; i < c.left; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = c.data.data() + (i * c.dim + static_cast<std::size_t>(y[n])) * c.right;
      for (std::size_t j = 0; j < c.right; ++j)
        next[j] += vi * sigma_value(mode_, row[j]);
    }
    v.swap(next);
  }
  return v[0];
}

}  // namespace ptn
