#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ptn/matrix.hpp"
#include "ptn/rng.hpp"

namespace ptn {

// How unconstrained core parameters become non-negative mass. born
// squares the full chain contraction; the sigma_* variants map each core
// entry through a pointwise non-negative function before contracting.
enum class PositivityMode { born, sigma_exp, sigma_abs, sigma_sq, sigma_softplus };

// False only for born.
bool uses_sigma(PositivityMode mode) noexcept;
const char* to_string(PositivityMode mode) noexcept;
std::optional<PositivityMode> parse_positivity_mode(std::string_view name) noexcept;

// Pointwise positivity map and its derivative. born is the identity so
// that chain code can apply these unconditionally.
double sigma_value(PositivityMode mode, double x) noexcept;
double sigma_derivative(PositivityMode mode, double x) noexcept;

// One third-order core with shape (left, dim, right), stored row-major:
// data[(i * dim + y) * right + j].
struct Core {
  std::size_t left = 0;
  std::size_t dim = 0;
  std::size_t right = 0;
  std::vector<double> data;

  Core() = default;
  Core(std::size_t left_, std::size_t dim_, std::size_t right_)
      : left(left_), dim(dim_), right(right_), data(left_ * dim_ * right_, 0.0) {}

  double& at(std::size_t i, std::size_t y, std::size_t j) noexcept {
    return data[(i * dim + y) * right + j];
  }
  double at(std::size_t i, std::size_t y, std::size_t j) const noexcept {
    return data[(i * dim + y) * right + j];
  }
  std::size_t size() const noexcept { return data.size(); }
};

// Chain of third-order cores over discrete variables, with unit boundary
// ranks so the full contraction is scalar. Immutable during evaluation
// and sampling; training mutates it between evaluation phases.
class MpsModel {
 public:
  // Takes ownership of the cores. Validates bond consistency, the unit
  // boundary ranks, and that every parameter is finite.
  MpsModel(std::vector<Core> cores, PositivityMode mode);

  // Random model with every interior bond equal to `rank` and entries
  // i.i.d. N(0, init_std^2). init_std <= 0 selects the 1/sqrt(rank)
  // default, which keeps per-step chain growth O(1); pass 1.0 to get the
  // unit-variance regime of the instability experiments.
  static MpsModel random(PositivityMode mode, std::span<const int> dims, std::size_t rank,
                         Rng& rng, double init_std = 0.0);

  std::size_t length() const noexcept { return cores_.size(); }
  int dim(std::size_t n) const;
  std::size_t rank(std::size_t n) const;  // R_n for n in [0, length()]
  std::vector<int> dims() const;
  std::vector<std::size_t> ranks() const;
  PositivityMode mode() const noexcept { return mode_; }
  std::size_t parameter_count() const noexcept;
  std::size_t max_rank() const noexcept;
  std::size_t max_dim() const noexcept;

  const Core& core(std::size_t n) const;
  Core& core(std::size_t n);

  // Raw R_n x R_{n+1} slice G^{(n)}[y]. The positivity map is *not*
  // applied here; callers apply it, so gradients stay defined at the
  // parameter level.
  Matrix core_slice(std::size_t n, int y) const;

  // Positivity-mapped slices summed over the free leg. In born mode this
  // is the plain sum of slices, which only the doubled-chain machinery
  // has a use for; born marginalization never happens on amplitudes.
  Matrix marginalized_core(std::size_t n) const;

  // Unscaled chain contraction of the (mapped) slices. Overflows to
  // +-inf on long chains by design: this is the reference path for
  // enumeration oracles and the overflow demonstrations, not a base for
  // evaluators.
  double psi_raw(std::span<const int> y) const;

 private:
  std::vector<Core> cores_;
  PositivityMode mode_;
};

inline bool uses_sigma(PositivityMode mode) noexcept { return mode != PositivityMode::born; }

inline double sigma_value(PositivityMode mode, double x) noexcept {
  switch (mode) {
    case PositivityMode::born:
      return x;
    case PositivityMode::sigma_exp:
      return std::exp(x);
    case PositivityMode::sigma_abs:
      return std::fabs(x);
    case PositivityMode::sigma_sq:
      return x * x;
    case PositivityMode::sigma_softplus:
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return x;
}

inline double sigma_derivative(PositivityMode mode, double x) noexcept {
  switch (mode) {
    case PositivityMode::born:
      return 1.0;
    case PositivityMode::sigma_exp:
      return std::exp(x);
    case PositivityMode::sigma_abs:
      return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case PositivityMode::sigma_sq:
      return 2.0 * x;
    case PositivityMode::sigma_softplus:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return 1.0;
}

}  // namespace ptn
