#include "ptn/grad.hpp"

#include <cmath>
#include <string>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"

namespace ptn {

namespace {

std::size_t vec_bytes(std::size_t n) { return n * sizeof(double); }

// Per-core sigma-derivative arrays, built once per gradient call instead
// of re-evaluating the map for every sample and coordinate. A null entry
// means the derivative is identically one (born); exp aliases the mapped
// values since the map is its own derivative.
struct DerivCache {
  std::vector<std::vector<double>> storage;
  std::vector<const double*> data;

  DerivCache(const MpsModel& model, const detail::MappedCores& mapped) {
    const std::size_t n = model.length();
    data.assign(n, nullptr);
    switch (model.mode()) {
      case PositivityMode::born:
        return;
      case PositivityMode::sigma_exp:
        for (std::size_t i = 0; i < n; ++i) data[i] = mapped.data[i];
        return;
      default:
        break;
    }
    storage.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Core& c = model.core(i);
      storage[i].resize(c.data.size());
      for (std::size_t k = 0; k < c.data.size(); ++k)
        storage[i][k] = sigma_derivative(model.mode(), c.data[k]);
      data[i] = storage[i].data();
    }
  }

  std::size_t bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& s : storage) total += s.size() * sizeof(double);
    return total;
  }
};

// Contiguous storage for one scaled state per bond (vector of length R_n
// at bond n).
struct BondStates {
  std::vector<double> buf;
  std::vector<std::size_t> offset;

  explicit BondStates(const MpsModel& model) {
    offset.resize(model.length() + 1);
    std::size_t total = 0;
    for (std::size_t n = 0; n <= model.length(); ++n) {
      offset[n] = total;
      total += model.rank(n);
    }
    buf.assign(total, 0.0);
  }
  double* at(std::size_t n) { return buf.data() + offset[n]; }
  const double* at(std::size_t n) const { return buf.data() + offset[n]; }
  std::size_t bytes() const { return vec_bytes(buf.size()); }
};

// Forward scaled chain over per-sample slices; states stored per bond.
// Returns the accumulated log magnitude of the chain.
double forward_slices(const MpsModel& model, const detail::MappedCores& mapped,
                      std::span<const int> y, BondStates& states,
                      std::optional<std::size_t> sample) {
  states.at(0)[0] = 1.0;
  double log_scale = 0.0;
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    double* next = states.at(n + 1);
    detail::row_times_slice(states.at(n), mapped.data[n], c.left, c.dim, c.right,
                            static_cast<std::size_t>(y[n]), next);
    const double gamma = detail::normalize_l2(next, c.right);
    if (gamma == 0.0) throw zero_amplitude_error(n, sample);
    if (!std::isfinite(gamma))
      throw numerical_error("forward chain produced a non-finite scale at position " +
                            std::to_string(n));
    log_scale += std::log(gamma);
  }
  return log_scale + std::log(std::fabs(states.at(model.length())[0]));
}

// sigma-mode Z chain over marginalized matrices, forward and backward,
// all states retained.
struct SigmaZStates {
  BondStates fwd;
  BondStates bwd;
  double log_z = 0.0;

  SigmaZStates(const MpsModel& model, const std::vector<std::vector<double>>& gdot)
      : fwd(model), bwd(model) {
    const std::size_t N = model.length();
    fwd.at(0)[0] = 1.0;
    double ls = 0.0;
    std::vector<double> tmp;
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      double* next = fwd.at(n + 1);
      std::fill(next, next + c.right, 0.0);
      const double* m = gdot[n].data();
      const double* v = fwd.at(n);
      for (std::size_t i = 0; i < c.left; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* row = m + i * c.right;
        for (std::size_t j = 0; j < c.right; ++j) next[j] += vi * row[j];
      }
      const double gamma = detail::normalize_l2(next, c.right);
      if (gamma == 0.0) throw zero_amplitude_error(n);
      ls += std::log(gamma);
    }
    log_z = ls + std::log(std::fabs(fwd.at(N)[0]));

    bwd.at(N)[0] = 1.0;
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      double* prev = bwd.at(n);
      const double* m = gdot[n].data();
      const double* u = bwd.at(n + 1);
      for (std::size_t i = 0; i < c.left; ++i) {
        const double* row = m + i * c.right;
        double acc = 0.0;
        for (std::size_t j = 0; j < c.right; ++j) acc += row[j] * u[j];
        prev[i] = acc;
      }
      const double gamma = detail::normalize_l2(prev, c.left);
      if (gamma == 0.0) throw zero_amplitude_error(n);
    }
  }
};

// born Z chain: doubled forward/backward PSD environments, Frobenius
// normalized, all retained.
struct BornZStates {
  std::vector<std::vector<double>> fwd;  // fwd[n]: R_n x R_n
  std::vector<std::vector<double>> bwd;  // bwd[n]: R_n x R_n
  double log_z = 0.0;

  explicit BornZStates(const MpsModel& model) {
    const std::size_t N = model.length();
    fwd.resize(N + 1);
    bwd.resize(N + 1);
    std::vector<double> scratch;
    fwd[0] = {1.0};
    double ls = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      fwd[n + 1].resize(c.right * c.right);
      scratch.resize(c.left * c.right);
      const auto symbols = detail::all_symbols(c.dim);
      detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, fwd[n].data(), symbols,
                                fwd[n + 1].data(), scratch.data());
      const double gamma = detail::normalize_l2(fwd[n + 1].data(), fwd[n + 1].size());
      if (gamma == 0.0) throw zero_amplitude_error(n);
      ls += std::log(gamma);
    }
    log_z = ls + std::log(std::fabs(fwd[N][0]));

    bwd[N] = {1.0};
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      bwd[n].resize(c.left * c.left);
      scratch.resize(c.left * c.right);
      const auto symbols = detail::all_symbols(c.dim);
      detail::doubled_right_step(c.data.data(), c.left, c.dim, c.right, bwd[n + 1].data(),
                                 symbols, bwd[n].data(), scratch.data());
      const double gamma = detail::normalize_l2(bwd[n].data(), bwd[n].size());
      if (gamma == 0.0) throw zero_amplitude_error(n);
    }
  }

  std::size_t bytes() const {
    std::size_t total = 0;
    for (const auto& v : fwd) total += vec_bytes(v.size());
    for (const auto& v : bwd) total += vec_bytes(v.size());
    return total;
  }
};

// d log Z / d core for a sigma-mode model, written into grads.
void add_sigma_z_gradient(const MpsModel& model, const SigmaZStates& zs,
                          const std::vector<std::vector<double>>& gdot,
                          const DerivCache& deriv, GradientSet& grads) {
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    const double* f = zs.fwd.at(n);
    const double* b = zs.bwd.at(n + 1);
    // Local overlap; positive whenever Z > 0.
    double s = 0.0;
    const double* m = gdot[n].data();
    for (std::size_t i = 0; i < c.left; ++i) {
      double inner = 0.0;
      const double* row = m + i * c.right;
      for (std::size_t j = 0; j < c.right; ++j) inner += row[j] * b[j];
      s += f[i] * inner;
    }
    if (s == 0.0) throw zero_amplitude_error(n);
    const double inv = 1.0 / s;
    double* g = grads.cores[n].data();
    const double* dv = deriv.data[n];
    for (std::size_t i = 0; i < c.left; ++i)
      for (std::size_t y = 0; y < c.dim; ++y) {
        const double coef = f[i] * inv;
        const std::size_t base = (i * c.dim + y) * c.right;
        for (std::size_t j = 0; j < c.right; ++j)
          g[base + j] += coef * b[j] * dv[base + j];
      }
  }
}

// d log Z / d core for a born model: 2 W G[y] E / s, with
// s = sum_y <W G[y] E, G[y]> the local positive overlap.
void add_born_z_gradient(const MpsModel& model, const BornZStates& zs, GradientSet& grads) {
  std::vector<double> wg;   // W * G[y]: left x right
  std::vector<double> wge;  // W G[y] E for every y: dim x left x right
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    const double* W = zs.fwd[n].data();
    const double* E = zs.bwd[n + 1].data();
    wg.resize(c.left * c.right);
    wge.assign(c.dim * c.left * c.right, 0.0);
    double s = 0.0;
    for (std::size_t y = 0; y < c.dim; ++y) {
      for (std::size_t a = 0; a < c.left; ++a) {
        double* row = wg.data() + a * c.right;
        std::fill(row, row + c.right, 0.0);
        const double* wrow = W + a * c.left;
        for (std::size_t i = 0; i < c.left; ++i) {
          const double w = wrow[i];
          if (w == 0.0) continue;
          const double* gr = c.data.data() + (i * c.dim + y) * c.right;
          for (std::size_t j = 0; j < c.right; ++j) row[j] += w * gr[j];
        }
      }
      for (std::size_t a = 0; a < c.left; ++a) {
        const double* row = wg.data() + a * c.right;
        double* out = wge.data() + (y * c.left + a) * c.right;
        const double* gr = c.data.data() + (a * c.dim + y) * c.right;
        for (std::size_t j = 0; j < c.right; ++j) {
          double acc = 0.0;
          const double* erow = E + j * c.right;  // E is symmetric
          for (std::size_t k = 0; k < c.right; ++k) acc += row[k] * erow[k];
          out[j] = acc;
          s += acc * gr[j];
        }
      }
    }
    if (s == 0.0) throw zero_amplitude_error(n);
    const double coef = 2.0 / s;
    double* g = grads.cores[n].data();
    for (std::size_t y = 0; y < c.dim; ++y)
      for (std::size_t a = 0; a < c.left; ++a) {
        const double* src = wge.data() + (y * c.left + a) * c.right;
        double* grow = g + (a * c.dim + y) * c.right;
        for (std::size_t j = 0; j < c.right; ++j) grow[j] += coef * src[j];
      }
  }
}

// Per-sample log-mass gradient contribution (factor `weight`, normally
// -1/K for the NLL). Returns the sample's unnormalized log mass.
double add_sample_gradient(const MpsModel& model, const detail::MappedCores& mapped,
                           const DerivCache& deriv, std::span<const int> y, double weight,
                           BondStates& fwd_states, std::vector<double>& bwd,
                           std::vector<double>& bwd_next, GradientSet& grads,
                           std::size_t sample_index) {
  const bool born = !uses_sigma(model.mode());
  const double chain = forward_slices(model, mapped, y, fwd_states, sample_index);
  const double mass = born ? 2.0 * chain : chain;
  const double factor = born ? 2.0 * weight : weight;

  const std::size_t N = model.length();
  bwd.assign(1, 1.0);  // suffix state at bond N
  for (std::size_t n = N; n-- > 0;) {
    const Core& c = model.core(n);
    const std::size_t yy = static_cast<std::size_t>(y[n]);
    // t = slice * suffix, before normalization.
    bwd_next.resize(c.left);
    detail::slice_times_col(mapped.data[n], bwd.data(), c.left, c.dim, c.right, yy,
                            bwd_next.data());
    const double* f = fwd_states.at(n);
    double s = 0.0;
    for (std::size_t i = 0; i < c.left; ++i) s += f[i] * bwd_next[i];
    if (s == 0.0) throw zero_amplitude_error(n, sample_index);
    const double coef = factor / s;
    double* g = grads.cores[n].data();
    const double* dv = deriv.data[n];
    const double* u = bwd.data();
    for (std::size_t i = 0; i < c.left; ++i) {
      const double fi = f[i];
      if (fi == 0.0) continue;
      const std::size_t base = (i * c.dim + yy) * c.right;
      if (dv) {
        for (std::size_t j = 0; j < c.right; ++j)
          g[base + j] += coef * fi * u[j] * dv[base + j];
      } else {
        for (std::size_t j = 0; j < c.right; ++j) g[base + j] += coef * fi * u[j];
      }
    }
    const double gamma = detail::normalize_l2(bwd_next.data(), c.left);
    if (gamma == 0.0) throw zero_amplitude_error(n, sample_index);
    bwd.swap(bwd_next);
  }
  return mass;
}

void check_batch(const MpsModel& model, SampleView batch) {
  if (batch.empty()) throw argument_error("grad_nll: batch must be non-empty");
  if (batch.width() != model.length())
    throw shape_error("grad_nll: sample width does not match model length");
  for (std::size_t k = 0; k < batch.count(); ++k) {
    const auto y = batch.row(k);
    for (std::size_t n = 0; n < y.size(); ++n)
      if (y[n] < 0 || y[n] >= model.dim(n))
        throw index_error("grad_nll: symbol out of range at position " + std::to_string(n) +
                          " of sample " + std::to_string(k));
  }
}

}  // namespace

GradientSet GradientSet::zeros_like(const MpsModel& model) {
  GradientSet g;
  g.cores.resize(model.length());
  for (std::size_t n = 0; n < model.length(); ++n)
    g.cores[n].assign(model.core(n).size(), 0.0);
  return g;
}

bool GradientSet::all_finite() const noexcept {
  for (const auto& c : cores)
    for (double x : c)
      if (!std::isfinite(x)) return false;
  return true;
}

double GradientSet::squared_norm() const noexcept {
  double acc = 0.0;
  for (const auto& c : cores)
    for (double x : c) acc += x * x;
  return acc;
}

void GradientSet::scale(double factor) noexcept {
  for (auto& c : cores)
    for (double& x : c) x *= factor;
}

LossAndGrad grad_nll(const MpsModel& model, SampleView batch, AllocationMeter* meter) {
  check_batch(model, batch);
  LossAndGrad out{0.0, 0.0, GradientSet::zeros_like(model)};
  if (meter) {
    std::size_t gbytes = 0;
    for (const auto& c : out.grads.cores) gbytes += vec_bytes(c.size());
    meter->add(gbytes);
  }

  detail::MappedCores mapped(model);
  const DerivCache deriv(model, mapped);
  if (meter) meter->add(mapped.bytes() + deriv.bytes());

  const bool born = !uses_sigma(model.mode());
  double mean_mass = 0.0;

  if (born) {
    BornZStates zs(model);
    if (meter) meter->add(zs.bytes());
    out.log_z = zs.log_z;
    add_born_z_gradient(model, zs, out.grads);
    if (meter) meter->release(zs.bytes());
  } else {
    const auto gdot = detail::marginalized_all(model, mapped);
    SigmaZStates zs(model, gdot);
    if (meter) meter->add(zs.fwd.bytes() + zs.bwd.bytes());
    out.log_z = zs.log_z;
    add_sigma_z_gradient(model, zs, gdot, deriv, out.grads);
    if (meter) meter->release(zs.fwd.bytes() + zs.bwd.bytes());
  }

  BondStates fwd(model);
  if (meter) meter->add(fwd.bytes());
  std::vector<double> bwd, bwd_next;
  const double weight = -1.0 / static_cast<double>(batch.count());
  for (std::size_t k = 0; k < batch.count(); ++k)
    mean_mass += add_sample_gradient(model, mapped, deriv, batch.row(k), weight, fwd, bwd,
                                     bwd_next, out.grads, k);
  mean_mass /= static_cast<double>(batch.count());
  out.loss = out.log_z - mean_mass;
  if (meter) {
    meter->release(fwd.bytes());
    meter->release(mapped.bytes() + deriv.bytes());
  }
  return out;
}

LossAndGrad grad_nll_naive(const MpsModel& model, SampleView batch) {
  check_batch(model, batch);
  LossAndGrad out{0.0, 0.0, GradientSet::zeros_like(model)};
  const bool born = !uses_sigma(model.mode());
  const std::size_t N = model.length();
  detail::MappedCores mapped(model);

  // Unscaled Z chains, forward and backward, all states kept.
  if (!born) {
    const auto gdot = detail::marginalized_all(model, mapped);
    std::vector<std::vector<double>> fz(N + 1), bz(N + 1);
    fz[0] = {1.0};
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      fz[n + 1].assign(c.right, 0.0);
      for (std::size_t i = 0; i < c.left; ++i)
        for (std::size_t j = 0; j < c.right; ++j)
          fz[n + 1][j] += fz[n][i] * gdot[n][i * c.right + j];
    }
    bz[N] = {1.0};
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      bz[n].assign(c.left, 0.0);
      for (std::size_t i = 0; i < c.left; ++i)
        for (std::size_t j = 0; j < c.right; ++j)
          bz[n][i] += gdot[n][i * c.right + j] * bz[n + 1][j];
    }
    const double z = fz[N][0];
    out.log_z = std::log(z);
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      double* g = out.grads.cores[n].data();
      const double* raw = c.data.data();
      for (std::size_t i = 0; i < c.left; ++i)
        for (std::size_t y = 0; y < c.dim; ++y) {
          const std::size_t base = (i * c.dim + y) * c.right;
          for (std::size_t j = 0; j < c.right; ++j)
            g[base + j] += fz[n][i] * bz[n + 1][j] / z *
                           sigma_derivative(model.mode(), raw[base + j]);
        }
    }
  } else {
    std::vector<std::vector<double>> fw(N + 1), bw(N + 1);
    std::vector<double> scratch;
    fw[0] = {1.0};
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      fw[n + 1].resize(c.right * c.right);
      scratch.resize(c.left * c.right);
      const auto symbols = detail::all_symbols(c.dim);
      detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, fw[n].data(), symbols,
                                fw[n + 1].data(), scratch.data());
    }
    bw[N] = {1.0};
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      bw[n].resize(c.left * c.left);
      scratch.resize(c.left * c.right);
      const auto symbols = detail::all_symbols(c.dim);
      detail::doubled_right_step(c.data.data(), c.left, c.dim, c.right, bw[n + 1].data(),
                                 symbols, bw[n].data(), scratch.data());
    }
    const double z = fw[N][0];
    out.log_z = std::log(z);
    std::vector<double> wg;
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      const double* W = fw[n].data();
      const double* E = bw[n + 1].data();
      double* g = out.grads.cores[n].data();
      wg.resize(c.left * c.right);
      for (std::size_t y = 0; y < c.dim; ++y) {
        for (std::size_t a = 0; a < c.left; ++a) {
          double* row = wg.data() + a * c.right;
          std::fill(row, row + c.right, 0.0);
          for (std::size_t i = 0; i < c.left; ++i) {
            const double w = W[a * c.left + i];
            if (w == 0.0) continue;
            const double* gr = c.data.data() + (i * c.dim + y) * c.right;
            for (std::size_t j = 0; j < c.right; ++j) row[j] += w * gr[j];
          }
        }
        for (std::size_t a = 0; a < c.left; ++a) {
          const double* row = wg.data() + a * c.right;
          double* grow = g + (a * c.dim + y) * c.right;
          for (std::size_t j = 0; j < c.right; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < c.right; ++k) acc += row[k] * E[j * c.right + k];
            grow[j] += 2.0 * acc / z;
          }
        }
      }
    }
  }

  // Per-sample mass gradients from unscaled prefix/suffix products.
  const double weight = -1.0 / static_cast<double>(batch.count());
  double mean_mass = 0.0;
  std::vector<std::vector<double>> pre(N + 1);
  std::vector<std::vector<double>> suf(N + 1);
  for (std::size_t k = 0; k < batch.count(); ++k) {
    const auto y = batch.row(k);
    pre[0] = {1.0};
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      pre[n + 1].assign(c.right, 0.0);
      detail::row_times_slice(pre[n].data(), mapped.data[n], c.left, c.dim, c.right,
                              static_cast<std::size_t>(y[n]), pre[n + 1].data());
    }
    suf[N] = {1.0};
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      suf[n].resize(c.left);
      detail::slice_times_col(mapped.data[n], suf[n + 1].data(), c.left, c.dim, c.right,
                              static_cast<std::size_t>(y[n]), suf[n].data());
    }
    const double psi = pre[N][0];
    const double factor = born ? 2.0 * weight : weight;
    mean_mass += born ? std::log(psi * psi) : std::log(psi);
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      const std::size_t yy = static_cast<std::size_t>(y[n]);
      double* g = out.grads.cores[n].data();
      const double* raw = c.data.data();
      for (std::size_t i = 0; i < c.left; ++i) {
        const std::size_t base = (i * c.dim + yy) * c.right;
        for (std::size_t j = 0; j < c.right; ++j)
          g[base + j] += factor * pre[n][i] * suf[n + 1][j] / psi *
                         sigma_derivative(model.mode(), raw[base + j]);
      }
    }
  }
  mean_mass /= static_cast<double>(batch.count());
  out.loss = out.log_z - mean_mass;
  return out;
}

GradCheckReport grad_check(const MpsModel& model, SampleView batch, double h) {
  if (!(h > 0.0)) throw argument_error("grad_check: h must be positive");
  const LossAndGrad analytic = grad_nll(model, batch);
  MpsModel probe = model;
  GradCheckReport report;
  // Coordinates whose magnitude sits below this floor are compared
  // absolutely; central differences cannot resolve relative error there.
  constexpr double kScaleFloor = 1e-4;
  for (std::size_t n = 0; n < model.length(); ++n) {
    Core& c = probe.core(n);
    for (std::size_t idx = 0; idx < c.data.size(); ++idx) {
      const double saved = c.data[idx];
      c.data[idx] = saved + h;
      const double up = nll(probe, batch).mean_nll;
      c.data[idx] = saved - h;
      const double down = nll(probe, batch).mean_nll;
      c.data[idx] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.grads.cores[n][idx];
      const double scale = std::max({std::fabs(a), std::fabs(numeric), kScaleFloor});
      const double rel = std::fabs(a - numeric) / scale;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_core = n;
        report.worst_index = idx;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ptn
