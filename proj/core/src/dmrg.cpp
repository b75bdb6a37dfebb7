#include "ptn/dmrg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "chain_ops.hpp"
#include "ptn/errors.hpp"
#include "ptn/eval.hpp"

namespace ptn {

namespace {

void require_born(const MpsModel& model, const char* site) {
  if (uses_sigma(model.mode()))
    throw config_error(std::string(site) +
                       ": two-site sweeps are only defined for born models; splitting "
                       "positivity-mapped cores by SVD would corrupt the update, a different "
                       "optimization problem must be solved");
}

double merged_slice_bilinear(const MergedTensor& m, std::size_t y1, std::size_t y2,
                             const double* l, const double* r) {
  double acc = 0.0;
  for (std::size_t a = 0; a < m.left; ++a) {
    const double la = l[a];
    if (la == 0.0) continue;
    const double* row = m.data.data() + ((a * m.d1 + y1) * m.d2 + y2) * m.right;
    double inner = 0.0;
    for (std::size_t b = 0; b < m.right; ++b) inner += row[b] * r[b];
    acc += la * inner;
  }
  return acc;
}

}  // namespace

MergedTensor merge(const MpsModel& model, std::size_t n) {
  if (n + 1 >= model.length())
    throw index_error("merge: no pair starting at position " + std::to_string(n));
  const Core& c1 = model.core(n);
  const Core& c2 = model.core(n + 1);
  MergedTensor merged(c1.left, c1.dim, c2.dim, c2.right);
  for (std::size_t a = 0; a < c1.left; ++a)
    for (std::size_t y1 = 0; y1 < c1.dim; ++y1) {
      const double* row1 = c1.data.data() + (a * c1.dim + y1) * c1.right;
      for (std::size_t m = 0; m < c1.right; ++m) {
        const double v = row1[m];
        if (v == 0.0) continue;
        for (std::size_t y2 = 0; y2 < c2.dim; ++y2) {
          const double* row2 = c2.data.data() + (m * c2.dim + y2) * c2.right;
          double* out = merged.data.data() + ((a * c1.dim + y1) * c2.dim + y2) * c2.right;
          for (std::size_t b = 0; b < c2.right; ++b) out[b] += v * row2[b];
        }
      }
    }
  return merged;
}

std::size_t split_merged(const MergedTensor& merged, SweepDirection direction,
                         std::size_t max_rank, double cutoff, Core& left_out, Core& right_out,
                         double* discarded_sq) {
  if (max_rank == 0) throw argument_error("split_merged: max_rank must be at least 1");
  if (cutoff < 0.0) throw argument_error("split_merged: cutoff must be non-negative");
  // The merged layout is already the (R_n D_n) x (D_{n+1} R_{n+2})
  // unfolding in row-major order.
  const std::size_t rows = merged.left * merged.d1;
  const std::size_t cols = merged.d2 * merged.right;
  const Matrix unfolded(rows, cols, merged.data);
  const SvdResult dec = svd(unfolded);

  const double smax = dec.s.empty() ? 0.0 : dec.s.front();
  std::size_t keep = 0;
  for (double s : dec.s)
    if (s >= cutoff * smax) ++keep;
  keep = std::max<std::size_t>(1, std::min(keep, max_rank));

  if (discarded_sq) {
    double acc = 0.0;
    for (std::size_t i = keep; i < dec.s.size(); ++i) acc += dec.s[i] * dec.s[i];
    *discarded_sq = acc;
  }

  left_out = Core(merged.left, merged.d1, keep);
  right_out = Core(keep, merged.d2, merged.right);
  const bool scale_right = direction == SweepDirection::left_to_right;
  for (std::size_t a = 0; a < merged.left; ++a)
    for (std::size_t y1 = 0; y1 < merged.d1; ++y1)
      for (std::size_t j = 0; j < keep; ++j)
        left_out.at(a, y1, j) =
            dec.u(a * merged.d1 + y1, j) * (scale_right ? 1.0 : dec.s[j]);
  for (std::size_t j = 0; j < keep; ++j)
    for (std::size_t y2 = 0; y2 < merged.d2; ++y2)
      for (std::size_t b = 0; b < merged.right; ++b)
        right_out.at(j, y2, b) =
            dec.vt(j, y2 * merged.right + b) * (scale_right ? dec.s[j] : 1.0);
  return keep;
}

void canonicalize_right(MpsModel& model) {
  require_born(model, "canonicalize_right");
  for (std::size_t n = model.length(); n-- > 1;) {
    const Core& c = model.core(n);
    const Matrix unfolded(c.left, c.dim * c.right, c.data);
    const SvdResult dec = svd(unfolded);
    const std::size_t k = dec.s.size();

    Core replacement(k, c.dim, c.right);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t y = 0; y < c.dim; ++y)
        for (std::size_t b = 0; b < c.right; ++b)
          replacement.at(j, y, b) = dec.vt(j, y * c.right + b);

    const Core& prev = model.core(n - 1);
    Core merged_prev(prev.left, prev.dim, k);
    for (std::size_t a = 0; a < prev.left; ++a)
      for (std::size_t y = 0; y < prev.dim; ++y)
        for (std::size_t j = 0; j < k; ++j) {
          double acc = 0.0;
          for (std::size_t b = 0; b < prev.right; ++b)
            acc += prev.at(a, y, b) * dec.u(b, j) * dec.s[j];
          merged_prev.at(a, y, j) = acc;
        }

    model.core(n) = std::move(replacement);
    model.core(n - 1) = std::move(merged_prev);
  }
}

double left_isometry_error(const Core& core) {
  Matrix gram(core.right, core.right);
  for (std::size_t y = 0; y < core.dim; ++y)
    for (std::size_t i = 0; i < core.left; ++i) {
      const double* row = core.data.data() + (i * core.dim + y) * core.right;
      for (std::size_t a = 0; a < core.right; ++a)
        for (std::size_t b = 0; b < core.right; ++b) gram(a, b) += row[a] * row[b];
    }
  for (std::size_t a = 0; a < core.right; ++a) gram(a, a) -= 1.0;
  return gram.frobenius_norm();
}

double right_isometry_error(const Core& core) {
  Matrix gram(core.left, core.left);
  for (std::size_t y = 0; y < core.dim; ++y)
    for (std::size_t a = 0; a < core.left; ++a) {
      const double* rowa = core.data.data() + (a * core.dim + y) * core.right;
      for (std::size_t b = 0; b < core.left; ++b) {
        const double* rowb = core.data.data() + (b * core.dim + y) * core.right;
        double acc = 0.0;
        for (std::size_t j = 0; j < core.right; ++j) acc += rowa[j] * rowb[j];
        gram(a, b) += acc;
      }
    }
  for (std::size_t a = 0; a < core.left; ++a) gram(a, a) -= 1.0;
  return gram.frobenius_norm();
}

void DmrgConfig::validate() const {
  if (learning_rate < 0.0) throw argument_error("DmrgConfig: learning_rate must be >= 0");
  if (max_rank == 0) throw argument_error("DmrgConfig: max_rank must be at least 1");
  if (cutoff < 0.0) throw argument_error("DmrgConfig: cutoff must be non-negative");
  if (epochs == 0) throw argument_error("DmrgConfig: epochs must be at least 1");
  if (batch_size == 0) throw argument_error("DmrgConfig: batch_size must be at least 1");
}

// Per-bond, per-sample scaled environment vectors for one batch.
struct DmrgSweeper::ScaledRows {
  std::vector<std::vector<double>> vecs;  // vecs[bond]: count * rank(bond)
  std::vector<std::vector<double>> logs;  // logs[bond]: count

  std::size_t bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& v : vecs) total += v.size() * sizeof(double);
    for (const auto& l : logs) total += l.size() * sizeof(double);
    return total;
  }
};

DmrgSweeper::DmrgSweeper(MpsModel& model, const DmrgConfig& config, AllocationMeter* meter)
    : model_(&model), config_(config), meter_(meter) {
  config_.validate();
  require_born(model, "DmrgSweeper");
  if (model.length() < 2)
    throw config_error("DmrgSweeper: two-site sweeps need at least two cores");
  canonicalize_right(model);
}

double DmrgSweeper::sweep(SampleView batch, const UpdateCallback& on_update) {
  if (failure_) return std::numeric_limits<double>::quiet_NaN();
  if (batch.empty()) throw argument_error("DmrgSweeper::sweep: batch must be non-empty");
  if (batch.width() != model_->length())
    throw shape_error("DmrgSweeper::sweep: sample width does not match model length");
  return sweep_impl(batch, on_update);
}

double DmrgSweeper::sweep_impl(SampleView batch, const UpdateCallback& on_update) {
  MpsModel& model = *model_;
  const std::size_t N = model.length();
  const std::size_t K = batch.count();
  const SweepDirection dir = next_direction_;
  next_direction_ = dir == SweepDirection::left_to_right ? SweepDirection::right_to_left
                                                         : SweepDirection::left_to_right;

  // Passive-side environments for every bond, built once per sweep; the
  // active side is maintained incrementally as the window moves.
  ScaledRows passive;
  passive.vecs.resize(N + 1);
  passive.logs.resize(N + 1);
  const bool l2r = dir == SweepDirection::left_to_right;

  auto fail = [&]() {
    failure_ = updates_ + 1;
    return std::numeric_limits<double>::quiet_NaN();
  };

  if (l2r) {
    passive.vecs[N].assign(K, 1.0);
    passive.logs[N].assign(K, 0.0);
    for (std::size_t n = N; n-- > 2;) {
      const Core& c = model.core(n);
      passive.vecs[n].assign(K * c.left, 0.0);
      passive.logs[n].assign(K, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const int y = batch.row(k)[n];
        double* dst = passive.vecs[n].data() + k * c.left;
        detail::slice_times_col(c.data.data(), passive.vecs[n + 1].data() + k * c.right, c.left,
                                c.dim, c.right, static_cast<std::size_t>(y), dst);
        const double gamma = detail::normalize_l2(dst, c.left);
        if (gamma == 0.0 || !std::isfinite(gamma)) return fail();
        passive.logs[n][k] = passive.logs[n + 1][k] + std::log(gamma);
      }
    }
  } else {
    passive.vecs[0].assign(K, 1.0);
    passive.logs[0].assign(K, 0.0);
    for (std::size_t n = 0; n + 2 <= N - 1; ++n) {
      const Core& c = model.core(n);
      passive.vecs[n + 1].assign(K * c.right, 0.0);
      passive.logs[n + 1].assign(K, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const int y = batch.row(k)[n];
        double* dst = passive.vecs[n + 1].data() + k * c.right;
        detail::row_times_slice(passive.vecs[n].data() + k * c.left, c.data.data(), c.left,
                                c.dim, c.right, static_cast<std::size_t>(y), dst);
        const double gamma = detail::normalize_l2(dst, c.right);
        if (gamma == 0.0 || !std::isfinite(gamma)) return fail();
        passive.logs[n + 1][k] = passive.logs[n][k] + std::log(gamma);
      }
    }
  }
  if (meter_) meter_->add(passive.bytes());

  // Active-side environments at the current window edge.
  std::vector<double> active_vecs(K, 1.0);
  std::vector<double> active_logs(K, 0.0);
  std::vector<double> tmp;

  double nll_acc = 0.0;
  std::size_t nll_count = 0;
  bool failed = false;

  const std::size_t pairs = N - 1;
  for (std::size_t step = 0; step < pairs && !failed; ++step) {
    const std::size_t p = l2r ? step : pairs - 1 - step;

    MergedTensor merged = merge(model, p);
    const std::size_t merged_bytes = merged.bytes();
    peak_merged_bytes_ = std::max(peak_merged_bytes_, merged_bytes);
    if (meter_) meter_->add(merged_bytes);

    double z2 = 0.0;
    for (double x : merged.data) z2 += x * x;
    if (!(z2 > 0.0) || !std::isfinite(z2)) {
      failed = true;
      fail();
      break;
    }
    const double log_z = std::log(z2);

    std::vector<double> grad(merged.data.size());
    if (meter_) meter_->add(grad.size() * sizeof(double));
    const double zcoef = 2.0 / z2;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = zcoef * merged.data[i];

    const double wcoef = -2.0 / static_cast<double>(K);
    double batch_nll = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto row = batch.row(k);
      const std::size_t y1 = static_cast<std::size_t>(row[p]);
      const std::size_t y2 = static_cast<std::size_t>(row[p + 1]);
      const double* l = l2r ? active_vecs.data() + k * merged.left
                            : passive.vecs[p].data() + k * merged.left;
      const double llog = l2r ? active_logs[k] : passive.logs[p][k];
      const double* r = l2r ? passive.vecs[p + 2].data() + k * merged.right
                            : active_vecs.data() + k * merged.right;
      const double rlog = l2r ? passive.logs[p + 2][k] : active_logs[k];
      const double psi = merged_slice_bilinear(merged, y1, y2, l, r);
      if (psi == 0.0 || !std::isfinite(psi)) {
        failed = true;
        break;
      }
      batch_nll += log_z - 2.0 * (std::log(std::fabs(psi)) + llog + rlog);
      const double coef = wcoef / psi;
      for (std::size_t a = 0; a < merged.left; ++a) {
        const double la = l[a];
        if (la == 0.0) continue;
        double* grow = grad.data() + ((a * merged.d1 + y1) * merged.d2 + y2) * merged.right;
        for (std::size_t b = 0; b < merged.right; ++b) grow[b] += coef * la * r[b];
      }
    }
    if (failed) {
      fail();
      if (meter_) {
        meter_->release(grad.size() * sizeof(double));
        meter_->release(merged_bytes);
      }
      break;
    }

    const double lr = config_.learning_rate;
    bool finite = true;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      merged.data[i] -= lr * grad[i];
      finite = finite && std::isfinite(merged.data[i]);
    }
    if (!finite) {
      fail();
      if (meter_) {
        meter_->release(grad.size() * sizeof(double));
        meter_->release(merged_bytes);
      }
      break;
    }

    Core new_left, new_right;
    const std::size_t svd_bytes = (merged.data.size() + merged.left * merged.d1 +
                                   merged.d2 * merged.right) *
                                  sizeof(double);
    if (meter_) meter_->add(svd_bytes);  // U, S, V^T working set upper bound
    split_merged(merged, dir, config_.max_rank, config_.cutoff, new_left, new_right);
    if (meter_) meter_->release(svd_bytes);
    model.core(p) = std::move(new_left);
    model.core(p + 1) = std::move(new_right);

    if (meter_) {
      meter_->release(grad.size() * sizeof(double));
      meter_->release(merged_bytes);
    }

    // Advance the active edge through the freshly isometric core.
    if (l2r) {
      const Core& c = model.core(p);
      std::vector<double> next(K * c.right);
      for (std::size_t k = 0; k < K; ++k) {
        const int y = batch.row(k)[p];
        detail::row_times_slice(active_vecs.data() + k * c.left, c.data.data(), c.left, c.dim,
                                c.right, static_cast<std::size_t>(y), next.data() + k * c.right);
        const double gamma = detail::normalize_l2(next.data() + k * c.right, c.right);
        if (gamma == 0.0 || !std::isfinite(gamma)) {
          failed = true;
          break;
        }
        active_logs[k] += std::log(gamma);
      }
      active_vecs.swap(next);
    } else {
      const Core& c = model.core(p + 1);
      std::vector<double> next(K * c.left);
      for (std::size_t k = 0; k < K; ++k) {
        const int y = batch.row(k)[p + 1];
        detail::slice_times_col(c.data.data(), active_vecs.data() + k * c.right, c.left, c.dim,
                                c.right, static_cast<std::size_t>(y), next.data() + k * c.left);
        const double gamma = detail::normalize_l2(next.data() + k * c.left, c.left);
        if (gamma == 0.0 || !std::isfinite(gamma)) {
          failed = true;
          break;
        }
        active_logs[k] += std::log(gamma);
      }
      active_vecs.swap(next);
    }
    if (failed) {
      fail();
      break;
    }

    ++updates_;
    nll_acc += batch_nll / static_cast<double>(K);
    ++nll_count;
    if (on_update) on_update(model, p, dir);
  }

  if (meter_) meter_->release(passive.bytes());
  if (failure_) return std::numeric_limits<double>::quiet_NaN();
  return nll_acc / static_cast<double>(nll_count) / static_cast<double>(N);
}

DmrgResult dmrg_train(MpsModel model, const DiscreteDataset& data,
                      const DiscreteDataset* validation, const DmrgConfig& config,
                      const EpochCallback& on_row, const UpdateCallback& on_update,
                      AllocationMeter* meter) {
  config.validate();
  if (data.rows() == 0) throw argument_error("dmrg_train: empty dataset");
  if (data.columns() != model.length())
    throw shape_error("dmrg_train: dataset columns do not match model length");

  AllocationMeter local_meter;
  AllocationMeter* m = meter ? meter : &local_meter;
  DmrgSweeper sweeper(model, config, m);
  Rng shuffle_rng(config.seed);

  DmrgResult result{model, {}, 0, std::nullopt, 0};
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_buf;

  using Clock = std::chrono::steady_clock;
  bool stopped = false;
  for (std::size_t epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
    const auto start = Clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    double epoch_nll = 0.0;
    std::size_t sweeps = 0;
    for (std::size_t first = 0; first < order.size() && !stopped;
         first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      batch_buf.resize(count * data.columns());
      for (std::size_t k = 0; k < count; ++k) {
        const auto row = data.row(order[first + k]);
        std::copy(row.begin(), row.end(), batch_buf.begin() + k * data.columns());
      }
      const double nll_pv = sweeper.sweep(SampleView(batch_buf.data(), count, data.columns()),
                                          on_update);
      if (sweeper.failure_update()) {
        result.failure_update = sweeper.failure_update();
        stopped = true;
        break;
      }
      epoch_nll += nll_pv;
      ++sweeps;
    }

    const double wall =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    LogRow row{static_cast<int>(epoch), "train",
               sweeps > 0 ? epoch_nll / static_cast<double>(sweeps)
                          : std::numeric_limits<double>::quiet_NaN(),
               wall, result.failure_update ? 1 : 0, sweeper.peak_merged_bytes()};
    result.log.push_back(row);
    if (on_row) on_row(row);

    if (validation && !result.failure_update) {
      const auto vstart = Clock::now();
      const double vnll =
          nll(model, validation->view()).mean_nll / static_cast<double>(model.length());
      LogRow vrow{static_cast<int>(epoch), "valid", vnll,
                  std::chrono::duration<double, std::milli>(Clock::now() - vstart).count(),
                  0, sweeper.peak_merged_bytes()};
      result.log.push_back(vrow);
      if (on_row) on_row(vrow);
    }
  }

  result.updates_completed = sweeper.updates_completed();
  result.peak_transient_bytes = m->peak;
  result.model = std::move(model);
  return result;
}

}  // namespace ptn
