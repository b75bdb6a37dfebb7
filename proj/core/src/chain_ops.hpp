#pragma once

// Internal contraction kernels shared by the evaluators, gradients,
// sampling and DMRG. Everything operates on raw (left, dim, right)
// core layouts so hot loops never materialize slice matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ptn/model.hpp"

namespace ptn::detail {

// L2 norm that survives entries near the double range: falls back to a
// max-scaled two-pass sum when the plain sum of squares over/underflows.
inline double robust_l2(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  if (acc > 0.0 && std::isfinite(acc)) return std::sqrt(acc);
  double amax = 0.0;
  for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, std::fabs(v[i]));
  if (amax == 0.0 || !std::isfinite(amax)) return amax;  // 0 or inf/nan passthrough
  double scaled = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = v[i] / amax;
    scaled += t * t;
  }
  return amax * std::sqrt(scaled);
}

// Normalizes v to unit L2 norm and returns the norm. Leaves v untouched
// when the norm is zero or non-finite.
inline double normalize_l2(double* v, std::size_t n) {
  const double norm = robust_l2(v, n);
  if (norm > 0.0 && std::isfinite(norm)) {
    const double inv = 1.0 / norm;
    for (std::size_t i = 0; i < n; ++i) v[i] *= inv;
  }
  return norm;
}

// out[j] = sum_i v[i] * data[(i*dim + y)*right + j]  -- row vector times
// the y-slice of a core-layout array.
inline void row_times_slice(const double* v, const double* data, std::size_t left,
                            std::size_t dim, std::size_t right, std::size_t y, double* out) {
  std::fill(out, out + right, 0.0);
  for (std::size_t i = 0; i < left; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const double* row = data + (i * dim + y) * right;
    for (std::size_t j = 0; j < right; ++j) out[j] += vi * row[j];
  }
}

// out[i] = sum_j data[(i*dim + y)*right + j] * v[j]  -- the y-slice of a
// core-layout array times a column vector.
inline void slice_times_col(const double* data, const double* v, std::size_t left,
                            std::size_t dim, std::size_t right, std::size_t y, double* out) {
  for (std::size_t i = 0; i < left; ++i) {
    const double* row = data + (i * dim + y) * right;
    double acc = 0.0;
    for (std::size_t j = 0; j < right; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

// v^T * M[y] * u for a core-layout slice.
inline double bilinear_slice(const double* v, const double* data, std::size_t left,
                             std::size_t dim, std::size_t right, std::size_t y,
                             const double* u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < left; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const double* row = data + (i * dim + y) * right;
    double inner = 0.0;
    for (std::size_t j = 0; j < right; ++j) inner += row[j] * u[j];
    acc += vi * inner;
  }
  return acc;
}

// Doubled-chain step from the left: out = sum over the given symbols of
// G[y]^T W G[y], where W is left x left and out is right x right.
// scratch must hold left * right doubles.
inline void doubled_left_step(const double* data, std::size_t left, std::size_t dim,
                              std::size_t right, const double* W, std::span<const int> symbols,
                              double* out, double* scratch) {
  std::fill(out, out + right * right, 0.0);
  for (int ys : symbols) {
    const std::size_t y = static_cast<std::size_t>(ys);
    // scratch = W * G[y]
    for (std::size_t a = 0; a < left; ++a) {
      double* srow = scratch + a * right;
      std::fill(srow, srow + right, 0.0);
      const double* wrow = W + a * left;
      for (std::size_t i = 0; i < left; ++i) {
        const double w = wrow[i];
        if (w == 0.0) continue;
        const double* g = data + (i * dim + y) * right;
        for (std::size_t j = 0; j < right; ++j) srow[j] += w * g[j];
      }
    }
    // out += G[y]^T * scratch
    for (std::size_t a = 0; a < left; ++a) {
      const double* g = data + (a * dim + y) * right;
      const double* srow = scratch + a * right;
      for (std::size_t j = 0; j < right; ++j) {
        const double gj = g[j];
        if (gj == 0.0) continue;
        double* orow = out + j * right;
        for (std::size_t k = 0; k < right; ++k) orow[k] += gj * srow[k];
      }
    }
  }
}

// Doubled-chain step from the right: out = sum over symbols of
// G[y] E G[y]^T, where E is right x right and out is left x left.
// scratch must hold left * right doubles.
inline void doubled_right_step(const double* data, std::size_t left, std::size_t dim,
                               std::size_t right, const double* E, std::span<const int> symbols,
                               double* out, double* scratch) {
  std::fill(out, out + left * left, 0.0);
  for (int ys : symbols) {
    const std::size_t y = static_cast<std::size_t>(ys);
    // scratch = G[y] * E
    for (std::size_t a = 0; a < left; ++a) {
      const double* g = data + (a * dim + y) * right;
      double* srow = scratch + a * right;
      std::fill(srow, srow + right, 0.0);
      for (std::size_t j = 0; j < right; ++j) {
        const double gj = g[j];
        if (gj == 0.0) continue;
        const double* erow = E + j * right;
        for (std::size_t k = 0; k < right; ++k) srow[k] += gj * erow[k];
      }
    }
    // out += scratch * G[y]^T
    for (std::size_t a = 0; a < left; ++a) {
      const double* srow = scratch + a * right;
      double* orow = out + a * left;
      for (std::size_t b = 0; b < left; ++b) {
        const double* g = data + (b * dim + y) * right;
        double acc = 0.0;
        for (std::size_t k = 0; k < right; ++k) acc += srow[k] * g[k];
        orow[b] += acc;
      }
    }
  }
}

inline std::vector<int> all_symbols(std::size_t dim) {
  std::vector<int> out(dim);
  for (std::size_t y = 0; y < dim; ++y) out[y] = static_cast<int>(y);
  return out;
}

// Positivity-mapped copy of every core (identity for born, so the copy
// is skipped and spans alias the model). Chain code reads slices from
// here instead of re-applying sigma per sample.
struct MappedCores {
  std::vector<std::vector<double>> storage;
  std::vector<const double*> data;

  explicit MappedCores(const MpsModel& model) {
    const std::size_t n = model.length();
    data.resize(n);
    if (!uses_sigma(model.mode())) {
      for (std::size_t i = 0; i < n; ++i) data[i] = model.core(i).data.data();
      return;
    }
    storage.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Core& c = model.core(i);
      storage[i].resize(c.data.size());
      for (std::size_t k = 0; k < c.data.size(); ++k)
        storage[i][k] = sigma_value(model.mode(), c.data[k]);
      data[i] = storage[i].data();
    }
  }

  std::size_t bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& s : storage) total += s.size() * sizeof(double);
    return total;
  }
};

// Marginalized matrices (left x right) per core, built from mapped data.
inline std::vector<std::vector<double>> marginalized_all(const MpsModel& model,
                                                         const MappedCores& mapped) {
  std::vector<std::vector<double>> out(model.length());
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    out[n].assign(c.left * c.right, 0.0);
    const double* src = mapped.data[n];
    for (std::size_t i = 0; i < c.left; ++i)
      for (std::size_t y = 0; y < c.dim; ++y) {
        const double* row = src + (i * c.dim + y) * c.right;
        double* dst = out[n].data() + i * c.right;
        for (std::size_t j = 0; j < c.right; ++j) dst[j] += row[j];
      }
  }
  return out;
}

// Kahan-compensated accumulator.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) noexcept {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace ptn::detail
