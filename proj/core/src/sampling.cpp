#include "ptn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"
#include "ptn/eval.hpp"

namespace ptn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Normalizes weights given as logs; returns probabilities.
std::vector<double> normalize_log_weights(std::vector<double> logw, std::size_t position) {
  double max_log = kNegInf;
  for (double x : logw) max_log = std::max(max_log, x);
  if (max_log == kNegInf) throw zero_amplitude_error(position);
  double total = 0.0;
  for (double& x : logw) {
    x = std::exp(x - max_log);
    total += x;
  }
  for (double& x : logw) x /= total;
  return logw;
}

int draw_categorical(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    acc += p[y];
    if (u < acc) return static_cast<int>(y);
  }
  return static_cast<int>(p.size() - 1);
}

// Unnormalized log mass of a partial assignment: assigned positions
// contribute their (mapped) slice, the rest are marginalized. Returns
// -inf when the mass is exactly zero.
double log_mass_partial(const MpsModel& model, const PartialAssignment& given) {
  for (const auto& [pos, sym] : given) {
    if (pos >= model.length())
      throw index_error("log_marginal: position " + std::to_string(pos) + " out of range");
    if (sym < 0 || sym >= model.dim(pos))
      throw index_error("log_marginal: symbol out of range at position " + std::to_string(pos));
  }
  const bool born = !uses_sigma(model.mode());
  double log_scale = 0.0;
  if (!born) {
    detail::MappedCores mapped(model);
    std::vector<double> v{1.0};
    std::vector<double> next;
    for (std::size_t n = 0; n < model.length(); ++n) {
      const Core& c = model.core(n);
      next.assign(c.right, 0.0);
      const auto it = given.find(n);
      if (it != given.end()) {
        detail::row_times_slice(v.data(), mapped.data[n], c.left, c.dim, c.right,
                                static_cast<std::size_t>(it->second), next.data());
      } else {
        for (std::size_t y = 0; y < c.dim; ++y) {
          // accumulate over the free leg
          for (std::size_t i = 0; i < c.left; ++i) {
            const double vi = v[i];
            if (vi == 0.0) continue;
            const double* row = mapped.data[n] + (i * c.dim + y) * c.right;
            for (std::size_t j = 0; j < c.right; ++j) next[j] += vi * row[j];
          }
        }
      }
      const double gamma = detail::normalize_l2(next.data(), next.size());
      if (gamma == 0.0) return kNegInf;
      log_scale += std::log(gamma);
      v.swap(next);
    }
    return log_scale + std::log(std::fabs(v[0]));
  }

  std::vector<double> W{1.0};
  std::vector<double> next;
  std::vector<double> scratch;
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    next.resize(c.right * c.right);
    scratch.resize(c.left * c.right);
    const auto it = given.find(n);
    std::vector<int> symbols =
        it != given.end() ? std::vector<int>{it->second} : detail::all_symbols(c.dim);
    detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, W.data(), symbols,
                              next.data(), scratch.data());
    const double gamma = detail::normalize_l2(next.data(), next.size());
    if (gamma == 0.0) return kNegInf;
    log_scale += std::log(gamma);
    W.swap(next);
  }
  return log_scale + std::log(std::fabs(W[0]));
}

}  // namespace

void QuerySpec::validate(const MpsModel& model) const {
  for (const auto& [pos, sym] : conditioned) {
    if (pos >= model.length())
      throw index_error("QuerySpec: conditioned position " + std::to_string(pos) +
                        " out of range");
    if (sym < 0 || sym >= model.dim(pos))
      throw index_error("QuerySpec: conditioned symbol out of range at position " +
                        std::to_string(pos));
  }
  for (std::size_t t : targets) {
    if (t >= model.length())
      throw index_error("QuerySpec: target position " + std::to_string(t) + " out of range");
    if (conditioned.count(t))
      throw argument_error("QuerySpec: position " + std::to_string(t) +
                           " is both conditioned and a target");
  }
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (std::size_t j = i + 1; j < targets.size(); ++j)
      if (targets[i] == targets[j])
        throw argument_error("QuerySpec: duplicate target position " +
                             std::to_string(targets[i]));
}

Sampler::Sampler(const MpsModel& model) : model_(&model), born_(!uses_sigma(model.mode())) {
  const std::size_t N = model.length();
  if (!born_) {
    detail::MappedCores mapped(model);
    mapped_.resize(N);
    for (std::size_t n = 0; n < N; ++n)
      mapped_[n].assign(mapped.data[n], mapped.data[n] + model.core(n).size());
    gdot_ = detail::marginalized_all(model, mapped);
    right_vec_.resize(N + 1);
    left_vec_.resize(N + 1);
    right_vec_[N] = {1.0};
    for (std::size_t n = N; n-- > 0;) {
      const Core& c = model.core(n);
      right_vec_[n].resize(c.left);
      for (std::size_t i = 0; i < c.left; ++i) {
        double acc = 0.0;
        const double* row = gdot_[n].data() + i * c.right;
        for (std::size_t j = 0; j < c.right; ++j) acc += row[j] * right_vec_[n + 1][j];
        right_vec_[n][i] = acc;
      }
      if (detail::normalize_l2(right_vec_[n].data(), right_vec_[n].size()) == 0.0)
        throw zero_amplitude_error(n);
    }
    left_vec_[0] = {1.0};
    for (std::size_t n = 0; n < N; ++n) {
      const Core& c = model.core(n);
      left_vec_[n + 1].assign(c.right, 0.0);
      for (std::size_t i = 0; i < c.left; ++i) {
        const double vi = left_vec_[n][i];
        if (vi == 0.0) continue;
        const double* row = gdot_[n].data() + i * c.right;
        for (std::size_t j = 0; j < c.right; ++j) left_vec_[n + 1][j] += vi * row[j];
      }
      if (detail::normalize_l2(left_vec_[n + 1].data(), left_vec_[n + 1].size()) == 0.0)
        throw zero_amplitude_error(n);
    }
    return;
  }

  right_psd_.resize(N + 1);
  left_psd_.resize(N + 1);
  std::vector<double> scratch;
  right_psd_[N] = {1.0};
  for (std::size_t n = N; n-- > 0;) {
    const Core& c = model.core(n);
    right_psd_[n].resize(c.left * c.left);
    scratch.resize(c.left * c.right);
    const auto symbols = detail::all_symbols(c.dim);
    detail::doubled_right_step(c.data.data(), c.left, c.dim, c.right, right_psd_[n + 1].data(),
                               symbols, right_psd_[n].data(), scratch.data());
    if (detail::normalize_l2(right_psd_[n].data(), right_psd_[n].size()) == 0.0)
      throw zero_amplitude_error(n);
  }
  left_psd_[0] = {1.0};
  for (std::size_t n = 0; n < N; ++n) {
    const Core& c = model.core(n);
    left_psd_[n + 1].resize(c.right * c.right);
    scratch.resize(c.left * c.right);
    const auto symbols = detail::all_symbols(c.dim);
    detail::doubled_left_step(c.data.data(), c.left, c.dim, c.right, left_psd_[n].data(),
                              symbols, left_psd_[n + 1].data(), scratch.data());
    if (detail::normalize_l2(left_psd_[n + 1].data(), left_psd_[n + 1].size()) == 0.0)
      throw zero_amplitude_error(n);
  }
}

std::vector<double> Sampler::weights_sigma(const double* left_unit, std::size_t n,
                                           const double* right_unit) const {
  const Core& c = model_->core(n);
  std::vector<double> logw(c.dim, kNegInf);
  for (std::size_t y = 0; y < c.dim; ++y) {
    const double m = detail::bilinear_slice(left_unit, mapped_[n].data(), c.left, c.dim,
                                            c.right, y, right_unit);
    if (m > 0.0) logw[y] = std::log(m);
  }
  return logw;
}

std::vector<double> Sampler::weights_born_forward(const double* left_unit, std::size_t n) const {
  const Core& c = model_->core(n);
  const std::vector<double>& E = right_psd_[n + 1];
  std::vector<double> logw(c.dim, kNegInf);
  std::vector<double> q(c.right);
  for (std::size_t y = 0; y < c.dim; ++y) {
    detail::row_times_slice(left_unit, c.data.data(), c.left, c.dim, c.right, y, q.data());
    double m = 0.0;
    for (std::size_t i = 0; i < c.right; ++i) {
      double inner = 0.0;
      const double* row = E.data() + i * c.right;
      for (std::size_t j = 0; j < c.right; ++j) inner += row[j] * q[j];
      m += q[i] * inner;
    }
    if (m > 0.0) logw[y] = std::log(m);
  }
  return logw;
}

std::vector<double> Sampler::weights_born_backward(std::size_t n,
                                                   const double* right_unit) const {
  const Core& c = model_->core(n);
  const std::vector<double>& W = left_psd_[n];
  std::vector<double> logw(c.dim, kNegInf);
  std::vector<double> t(c.left);
  for (std::size_t y = 0; y < c.dim; ++y) {
    detail::slice_times_col(c.data.data(), right_unit, c.left, c.dim, c.right, y, t.data());
    double m = 0.0;
    for (std::size_t i = 0; i < c.left; ++i) {
      double inner = 0.0;
      const double* row = W.data() + i * c.left;
      for (std::size_t j = 0; j < c.left; ++j) inner += row[j] * t[j];
      m += t[i] * inner;
    }
    if (m > 0.0) logw[y] = std::log(m);
  }
  return logw;
}

std::vector<double> Sampler::conditional(std::span<const int> prefix) const {
  const std::size_t n = prefix.size();
  if (n >= model_->length())
    throw index_error("conditional: prefix already covers the whole chain");
  for (std::size_t k = 0; k < n; ++k)
    if (prefix[k] < 0 || prefix[k] >= model_->dim(k))
      throw index_error("conditional: prefix symbol out of range at position " +
                        std::to_string(k));

  std::vector<double> left{1.0};
  std::vector<double> next;
  for (std::size_t k = 0; k < n; ++k) {
    const Core& c = model_->core(k);
    next.resize(c.right);
    detail::row_times_slice(left.data(), born_ ? c.data.data() : mapped_[k].data(), c.left,
                            c.dim, c.right, static_cast<std::size_t>(prefix[k]), next.data());
    if (detail::normalize_l2(next.data(), next.size()) == 0.0) throw zero_amplitude_error(k);
    left.swap(next);
  }
  const auto logw =
      born_ ? weights_born_forward(left.data(), n) : weights_sigma(left.data(), n, right_vec_[n + 1].data());
  return normalize_log_weights(logw, n);
}

Assignment Sampler::sample_one(Rng& rng) const {
  const std::size_t N = model_->length();
  Assignment out(N, 0);
  std::vector<double> left{1.0};
  std::vector<double> next;
  for (std::size_t n = 0; n < N; ++n) {
    const Core& c = model_->core(n);
    const auto logw = born_ ? weights_born_forward(left.data(), n)
                            : weights_sigma(left.data(), n, right_vec_[n + 1].data());
    const auto p = normalize_log_weights(logw, n);
    const int y = draw_categorical(p, rng);
    out[n] = y;
    next.resize(c.right);
    detail::row_times_slice(left.data(), born_ ? c.data.data() : mapped_[n].data(), c.left,
                            c.dim, c.right, static_cast<std::size_t>(y), next.data());
    if (detail::normalize_l2(next.data(), next.size()) == 0.0) throw zero_amplitude_error(n);
    left.swap(next);
  }
  return out;
}

Assignment Sampler::sample_one_backward(Rng& rng) const {
  const std::size_t N = model_->length();
  Assignment out(N, 0);
  std::vector<double> right{1.0};
  std::vector<double> next;
  for (std::size_t n = N; n-- > 0;) {
    const Core& c = model_->core(n);
    const auto logw = born_ ? weights_born_backward(n, right.data())
                            : weights_sigma(left_vec_[n].data(), n, right.data());
    const auto p = normalize_log_weights(logw, n);
    const int y = draw_categorical(p, rng);
    out[n] = y;
    next.resize(c.left);
    detail::slice_times_col(born_ ? c.data.data() : mapped_[n].data(), right.data(), c.left,
                            c.dim, c.right, static_cast<std::size_t>(y), next.data());
    if (detail::normalize_l2(next.data(), next.size()) == 0.0) throw zero_amplitude_error(n);
    right.swap(next);
  }
  return out;
}

std::vector<double> conditional_dist(const MpsModel& model, std::span<const int> prefix) {
  return Sampler(model).conditional(prefix);
}

std::vector<Assignment> sample(const MpsModel& model, Rng& rng, std::size_t count) {
  Sampler sampler(model);
  std::vector<Assignment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sampler.sample_one(rng));
  return out;
}

std::vector<Assignment> sample_backward(const MpsModel& model, Rng& rng, std::size_t count) {
  Sampler sampler(model);
  std::vector<Assignment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sampler.sample_one_backward(rng));
  return out;
}

double log_marginal(const MpsModel& model, const PartialAssignment& given) {
  const double mass = log_mass_partial(model, given);
  if (mass == kNegInf) return kNegInf;
  return mass - log_normalizer(model);
}

PartialAssignment sample_query(const MpsModel& model, const QuerySpec& query, Rng& rng) {
  query.validate(model);
  PartialAssignment assigned = query.conditioned;
  PartialAssignment result;
  for (std::size_t t : query.targets) {
    const int d = model.dim(t);
    std::vector<double> logw(static_cast<std::size_t>(d), kNegInf);
    for (int v = 0; v < d; ++v) {
      assigned[t] = v;
      logw[static_cast<std::size_t>(v)] = log_mass_partial(model, assigned);
    }
    assigned.erase(t);
    const auto p = normalize_log_weights(std::move(logw), t);
    const int y = draw_categorical(p, rng);
    assigned[t] = y;
    result[t] = y;
  }
  return result;
}

}  // namespace ptn
