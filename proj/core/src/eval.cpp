#include "ptn/eval.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <thread>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"

namespace ptn {

namespace {

void check_assignment(const MpsModel& model, std::span<const int> y) {
  if (y.size() != model.length())
    throw shape_error("assignment length " + std::to_string(y.size()) +
                      " does not match model length " + std::to_string(model.length()));
  for (std::size_t n = 0; n < y.size(); ++n)
    if (y[n] < 0 || y[n] >= model.dim(n))
      throw index_error("symbol " + std::to_string(y[n]) + " out of range at position " +
                        std::to_string(n));
}

// Scaled chain over per-position slices taken from `mapped`. Returns the
// accumulated log magnitude; `sign_out`, when given, receives the sign
// of the collapsed scalar.
double scaled_slice_chain(const MpsModel& model, const detail::MappedCores& mapped,
                          std::span<const int> y, std::optional<std::size_t> sample,
                          double* sign_out = nullptr) {
  std::vector<double> v{1.0};
  std::vector<double> next;
  double log_scale = 0.0;
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    next.resize(c.right);
    detail::row_times_slice(v.data(), mapped.data[n], c.left, c.dim, c.right,
                            static_cast<std::size_t>(y[n]), next.data());
    const double gamma = detail::normalize_l2(next.data(), next.size());
    if (gamma == 0.0) throw zero_amplitude_error(n, sample);
    if (!std::isfinite(gamma))
      throw numerical_error("scaled chain produced a non-finite scale at position " +
                            std::to_string(n));
    log_scale += std::log(gamma);
    v.swap(next);
  }
  if (sign_out) *sign_out = v[0] < 0.0 ? -1.0 : 1.0;
  return log_scale + std::log(std::fabs(v[0]));
}

// Scaled chain over precomputed (left x right) matrices.
double scaled_matrix_chain(const std::vector<std::vector<double>>& mats, const MpsModel& model) {
  std::vector<double> v{1.0};
  std::vector<double> next;
  double log_scale = 0.0;
  for (std::size_t n = 0; n < mats.size(); ++n) {
    const Core& c = model.core(n);
    next.assign(c.right, 0.0);
    const double* m = mats[n].data();
    for (std::size_t i = 0; i < c.left; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = m + i * c.right;
      for (std::size_t j = 0; j < c.right; ++j) next[j] += vi * row[j];
    }
    const double gamma = detail::normalize_l2(next.data(), next.size());
    if (gamma == 0.0) throw zero_amplitude_error(n);
    log_scale += std::log(gamma);
    v.swap(next);
  }
  return log_scale + std::log(std::fabs(v[0]));
}

// Scaled doubled chain, fully marginalized: log of sum_y Psi(y)^2.
double scaled_doubled_chain(const MpsModel& model) {
  std::vector<double> W{1.0};
  std::vector<double> next;
  std::vector<double> scratch;
  double log_scale = 0.0;
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    next.resize(c.right * c.right);
    scratch.resize(c.left * c.right);
    const auto symbols = detail::all_symbols(c.dim);
    detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, W.data(), symbols,
                              next.data(), scratch.data());
    const double gamma = detail::normalize_l2(next.data(), next.size());
    if (gamma == 0.0) throw zero_amplitude_error(n);
    log_scale += std::log(gamma);
    W.swap(next);
  }
  // The collapsed 1x1 state is non-negative by construction.
  return log_scale + std::log(std::fabs(W[0]));
}

}  // namespace

double log_p_sigma(const MpsModel& model, std::span<const int> y) {
  if (!uses_sigma(model.mode()))
    throw config_error("log_p_sigma: model is not in a sigma mode");
  check_assignment(model, y);
  detail::MappedCores mapped(model);
  return scaled_slice_chain(model, mapped, y, std::nullopt);
}

double log_z_sigma(const MpsModel& model) {
  if (!uses_sigma(model.mode()))
    throw config_error("log_z_sigma: model is not in a sigma mode");
  detail::MappedCores mapped(model);
  return scaled_matrix_chain(detail::marginalized_all(model, mapped), model);
}

double log_p_born(const MpsModel& model, std::span<const int> y) {
  if (model.mode() != PositivityMode::born)
    throw config_error("log_p_born: model is not in born mode");
  check_assignment(model, y);
  detail::MappedCores mapped(model);
  double sign = 1.0;
  return 2.0 * scaled_slice_chain(model, mapped, y, std::nullopt, &sign);
}

double log_z_born(const MpsModel& model) {
  if (model.mode() != PositivityMode::born)
    throw config_error("log_z_born: model is not in born mode");
  return scaled_doubled_chain(model);
}

double log_mass(const MpsModel& model, std::span<const int> y) {
  return uses_sigma(model.mode()) ? log_p_sigma(model, y) : log_p_born(model, y);
}

double log_normalizer(const MpsModel& model) {
  return uses_sigma(model.mode()) ? log_z_sigma(model) : log_z_born(model);
}

BatchEval nll(const MpsModel& model, SampleView batch, unsigned threads) {
  if (batch.empty()) throw argument_error("nll: batch must be non-empty");
  if (batch.width() != model.length())
    throw shape_error("nll: sample width " + std::to_string(batch.width()) +
                      " does not match model length " + std::to_string(model.length()));
  BatchEval out;
  out.log_z = log_normalizer(model);
  out.per_sample.resize(batch.count());
  detail::MappedCores mapped(model);
  const bool born = !uses_sigma(model.mode());

  const auto eval_range = [&](std::size_t first, std::size_t last,
                              std::exception_ptr& error) noexcept {
    try {
      for (std::size_t k = first; k < last; ++k) {
        const auto y = batch.row(k);
        check_assignment(model, y);
        const double chain = scaled_slice_chain(model, mapped, y, k);
        const double mass = born ? 2.0 * chain : chain;
        out.per_sample[k] = {mass - out.log_z, out.log_z, out.log_z - mass};
      }
    } catch (...) {
      error = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), batch.count());
  std::vector<std::exception_ptr> errors(workers);
  if (workers == 1) {
    eval_range(0, batch.count(), errors[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = (batch.count() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = w * stride;
      const std::size_t last = std::min(batch.count(), first + stride);
      pool.emplace_back(eval_range, first, last, std::ref(errors[w]));
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  double acc = 0.0;
  for (const EvalResult& r : out.per_sample) acc += r.nll;
  out.mean_nll = acc / static_cast<double>(batch.count());
  return out;
}

double naive_z(const MpsModel& model) {
  if (uses_sigma(model.mode())) {
    std::vector<double> v{1.0};
    std::vector<double> next;
    for (std::size_t n = 0; n < model.length(); ++n) {
      const Matrix g = model.marginalized_core(n);
      next.assign(g.cols(), 0.0);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) next[j] += v[i] * g(i, j);
      v.swap(next);
    }
    return v[0];
  }
  std::vector<double> W{1.0};
  std::vector<double> next;
  std::vector<double> scratch;
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    next.resize(c.right * c.right);
    scratch.resize(c.left * c.right);
    const auto symbols = detail::all_symbols(c.dim);
    detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, W.data(), symbols,
                              next.data(), scratch.data());
    W.swap(next);
  }
  return W[0];
}

double naive_loss(const MpsModel& model, SampleView batch) {
  if (batch.empty()) throw argument_error("naive_loss: batch must be non-empty");
  const double z = naive_z(model);
  const bool born = !uses_sigma(model.mode());
  double acc = 0.0;
  for (std::size_t k = 0; k < batch.count(); ++k) {
    const double psi = model.psi_raw(batch.row(k));
    acc += born ? std::log(psi * psi) : std::log(psi);
  }
  return std::log(z) - acc / static_cast<double>(batch.count());
}

}  // namespace ptn
