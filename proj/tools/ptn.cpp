// Command-line entry point: train / eval / sample / bench / diag over the
// core library, with per-run output directories and reproducible seeds.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error,
// 4 numerical failure (the instability experiments rely on 4 being
// distinguishable from a bug).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptn/data.hpp"
#include "ptn/diagnostics.hpp"
#include "ptn/dmrg.hpp"
#include "ptn/errors.hpp"
#include "ptn/eval.hpp"
#include "ptn/metrics.hpp"
#include "ptn/model.hpp"
#include "ptn/sampling.hpp"
#include "ptn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
  std::string out_dir;
  bool force = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out_dir, "Run output directory (default under $PTN_OUTPUT_ROOT)");
  cmd->add_flag("--force", opts.force, "Allow writing into an existing run directory");
  cmd->add_option("--seed", opts.seed, "Random seed");
  cmd->add_option("--threads", opts.threads, "Worker parallelism cap")
      ->check(CLI::PositiveNumber);
}

fs::path prepare_run_dir(const CommonOpts& opts, const std::string& subcommand,
                         const json& config) {
  fs::path dir;
  if (!opts.out_dir.empty()) {
    dir = opts.out_dir;
  } else {
    const char* root = std::getenv("PTN_OUTPUT_ROOT");
    dir = fs::path(root ? root : "runs") /
          (subcommand + "-seed" + std::to_string(opts.seed));
  }
  if (fs::exists(dir / "config.json") && !opts.force)
    throw ptn::config_error("run directory " + dir.string() +
                            " already holds a run; pass --force to overwrite");
  fs::create_directories(dir);
  std::ofstream cfg(dir / "config.json");
  if (!cfg) throw ptn::io_error("cannot write " + (dir / "config.json").string());
  cfg << config.dump(2) << '\n';
  std::ofstream(dir / "metrics.jsonl", std::ios::trunc).flush();
  return dir;
}

ptn::PositivityMode parse_mode_or_throw(const std::string& name) {
  const auto mode = ptn::parse_positivity_mode(name);
  if (!mode)
    throw ptn::config_error("unknown positivity mode '" + name +
                            "' (born, sigma_exp, sigma_abs, sigma_sq, sigma_softplus)");
  return *mode;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (out.empty()) throw ptn::argument_error("expected a comma-separated list of integers");
  return out;
}

struct TrainOpts {
  CommonOpts common;
  std::string data_path;
  std::string valid_path;
  std::string test_path;
  std::string mode = "sigma_exp";
  std::string method = "scaled-sgd";
  std::string optimizer = "sgd";
  std::size_t rank = 8;
  int dim_override = 0;
  double lr = 5e-3;
  std::size_t batch = 32;
  std::size_t epochs = 1;
  double init_std = 0.0;
  double grad_clip = 0.0;
  double dmrg_cutoff = 0.0;
  std::uint64_t max_iterations = 0;
};

int run_train(const TrainOpts& opts) {
  const ptn::PositivityMode mode = parse_mode_or_throw(opts.mode);
  if (opts.method != "scaled-sgd" && opts.method != "naive-sgd" && opts.method != "dmrg")
    throw ptn::config_error("unknown method '" + opts.method +
                            "' (scaled-sgd, naive-sgd, dmrg)");
  if (opts.method == "dmrg" && ptn::uses_sigma(mode))
    throw ptn::config_error(
        "dmrg cannot train " + std::string(ptn::to_string(mode)) +
        " models: the SVD split optimizes the raw merged tensor, but for positivity-mapped "
        "cores a different optimization problem must be solved; use --method scaled-sgd");

  json config{{"subcommand", "train"},
              {"data", opts.data_path},
              {"valid", opts.valid_path},
              {"test", opts.test_path},
              {"mode", opts.mode},
              {"method", opts.method},
              {"optimizer", opts.optimizer},
              {"rank", opts.rank},
              {"dim_override", opts.dim_override},
              {"learning_rate", opts.lr},
              {"batch_size", opts.batch},
              {"epochs", opts.epochs},
              {"init_std", opts.init_std},
              {"grad_clip", opts.grad_clip},
              {"dmrg_cutoff", opts.dmrg_cutoff},
              {"max_iterations", opts.max_iterations},
              {"seed", opts.common.seed},
              {"threads", opts.common.threads}};
  const fs::path dir = prepare_run_dir(opts.common, "train", config);
  const fs::path metrics_path = dir / "metrics.jsonl";

  const ptn::DiscreteDataset train_data =
      ptn::load_csv01(opts.data_path, std::nullopt, {}, ptn::SplitTag::train);
  std::optional<ptn::DiscreteDataset> valid_data;
  if (!opts.valid_path.empty())
    valid_data = ptn::load_csv01(opts.valid_path, std::nullopt, {}, ptn::SplitTag::valid);

  std::vector<int> dims(train_data.cardinalities());
  if (opts.dim_override > 0)
    for (std::size_t c = 0; c < dims.size(); ++c) {
      if (dims[c] > opts.dim_override)
        throw ptn::config_error("--dim " + std::to_string(opts.dim_override) +
                                " is below the inferred cardinality of column " +
                                std::to_string(c));
      dims[c] = opts.dim_override;
    }

  ptn::Rng rng(opts.common.seed);
  ptn::MpsModel model =
      ptn::MpsModel::random(mode, dims, opts.rank, rng, opts.init_std);

  const auto on_row = [&](const ptn::LogRow& row) {
    ptn::write_metrics({&row, 1}, metrics_path);
  };

  bool failed = false;
  std::uint64_t failure_iteration = 0;
  if (opts.method == "dmrg") {
    ptn::DmrgConfig dc;
    dc.learning_rate = opts.lr;
    dc.max_rank = opts.rank;
    dc.cutoff = opts.dmrg_cutoff;
    dc.epochs = opts.epochs;
    dc.batch_size = opts.batch;
    dc.seed = opts.common.seed;
    ptn::DmrgResult result = ptn::dmrg_train(std::move(model),
                                             train_data,
                                             valid_data ? &*valid_data : nullptr, dc, on_row);
    ptn::save_checkpoint(result.model, dir / "model.ptn", config.dump(), opts.common.seed);
    failed = result.failure_update.has_value();
    failure_iteration = failed ? *result.failure_update : 0;
    model = std::move(result.model);
  } else {
    ptn::TrainConfig tc;
    tc.learning_rate = opts.lr;
    tc.batch_size = opts.batch;
    tc.epochs = opts.epochs;
    tc.seed = opts.common.seed;
    tc.optimizer = opts.optimizer == "adam" ? ptn::OptimizerKind::adam : ptn::OptimizerKind::sgd;
    if (opts.grad_clip > 0.0) tc.grad_clip = opts.grad_clip;
    tc.init_std = opts.init_std;
    const ptn::TrainMethod method = opts.method == "naive-sgd" ? ptn::TrainMethod::naive_sgd
                                                               : ptn::TrainMethod::scaled_sgd;
    ptn::TrainResult result =
        ptn::train(std::move(model), train_data, valid_data ? &*valid_data : nullptr, tc,
                   method, on_row,
                   opts.max_iterations > 0 ? std::optional<std::uint64_t>(opts.max_iterations)
                                           : std::nullopt);
    ptn::save_checkpoint(result.best, dir / "model.ptn", config.dump(), opts.common.seed);
    failed = result.failure_iteration.has_value();
    failure_iteration = failed ? *result.failure_iteration : 0;
    if (result.best_epoch >= 0)
      std::cout << "best_valid_nll_per_variable=" << result.best_valid_nll_per_var
                << " best_epoch=" << result.best_epoch << '\n';
    model = std::move(result.best);
  }

  if (!opts.test_path.empty() && !failed) {
    const ptn::DiscreteDataset test_data =
        ptn::load_csv01(opts.test_path, std::nullopt, {}, ptn::SplitTag::test);
    const double test_nll = ptn::nll(model, test_data.view()).mean_nll /
                            static_cast<double>(model.length());
    const ptn::LogRow row{-1, "test", test_nll, 0.0, 0, std::nullopt};
    ptn::write_metrics({&row, 1}, metrics_path);
    std::cout << "test_nll_per_variable=" << test_nll << '\n';
  }

  std::cout << "checkpoint=" << (dir / "model.ptn").string() << '\n';
  if (failed) {
    std::cerr << "error: numerical: training failed at iteration " << failure_iteration << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

struct EvalOpts {
  CommonOpts common;
  std::string ckpt_path;
  std::string data_path;
};

int run_eval(const EvalOpts& opts) {
  json config{{"subcommand", "eval"},
              {"ckpt", opts.ckpt_path},
              {"data", opts.data_path},
              {"seed", opts.common.seed},
              {"threads", opts.common.threads}};
  const fs::path dir = prepare_run_dir(opts.common, "eval", config);
  const ptn::MpsModel model = ptn::load_checkpoint(opts.ckpt_path);
  const ptn::DiscreteDataset data =
      ptn::load_csv01(opts.data_path, std::nullopt, {}, ptn::SplitTag::test);
  if (data.columns() != model.length())
    throw ptn::config_error("dataset has " + std::to_string(data.columns()) +
                            " columns but the checkpoint has " +
                            std::to_string(model.length()) + " cores");
  const ptn::BatchEval result =
      ptn::nll(model, data.view(), static_cast<unsigned>(opts.common.threads));
  const double per_var = result.mean_nll / static_cast<double>(model.length());
  const ptn::LogRow row{0, "test", per_var, 0.0, 0, std::nullopt};
  ptn::write_metrics({&row, 1}, dir / "metrics.jsonl");
  std::cout << "rows=" << data.rows() << " nll=" << result.mean_nll
            << " nll_per_variable=" << per_var << " log_z=" << result.log_z << '\n';
  return kExitOk;
}

struct SampleOpts {
  CommonOpts common;
  std::string ckpt_path;
  std::size_t count = 1;
  bool backward = false;
};

int run_sample(const SampleOpts& opts) {
  json config{{"subcommand", "sample"},
              {"ckpt", opts.ckpt_path},
              {"count", opts.count},
              {"backward", opts.backward},
              {"seed", opts.common.seed},
              {"threads", opts.common.threads}};
  const fs::path dir = prepare_run_dir(opts.common, "sample", config);
  const ptn::MpsModel model = ptn::load_checkpoint(opts.ckpt_path);
  ptn::Rng rng(opts.common.seed);
  const auto draws = opts.backward ? ptn::sample_backward(model, rng, opts.count)
                                   : ptn::sample(model, rng, opts.count);
  const fs::path out_path = dir / "samples.csv";
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ptn::io_error("cannot write " + out_path.string());
  for (const auto& row : draws) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw ptn::io_error("write to " + out_path.string() + " failed");
  std::cout << "samples=" << out_path.string() << '\n';
  return kExitOk;
}

struct BenchOpts {
  CommonOpts common;
  std::string method = "scaled-sgd";
  std::string cores = "100";
  std::size_t rank = 8;
  int dim = 2;
  std::size_t batch = 32;
  std::size_t reps = 5;
};

int run_bench(const BenchOpts& opts) {
  if (opts.method != "scaled-sgd" && opts.method != "dmrg")
    throw ptn::config_error("bench method must be scaled-sgd or dmrg");
  json config{{"subcommand", "bench"}, {"method", opts.method},   {"cores", opts.cores},
              {"rank", opts.rank},     {"dim", opts.dim},         {"batch", opts.batch},
              {"reps", opts.reps},     {"seed", opts.common.seed}};
  const fs::path dir = prepare_run_dir(opts.common, "bench", config);
  const auto n_values = parse_size_list(opts.cores);
  const ptn::BenchMethod method = opts.method == "dmrg" ? ptn::BenchMethod::dmrg
                                                        : ptn::BenchMethod::scaled_sgd;
  std::ofstream csv(dir / "bench.csv", std::ios::trunc);
  ptn::write_bench_csv_header(csv);
  ptn::write_bench_csv_header(std::cout);
  for (std::size_t n : n_values) {
    const ptn::BenchResult row = ptn::bench_update(method, n, opts.rank, opts.dim, opts.batch,
                                                   opts.reps, opts.common.seed);
    ptn::write_bench_csv_row(csv, row);
    ptn::write_bench_csv_row(std::cout, row);
  }
  return kExitOk;
}

struct DiagOpts {
  CommonOpts common;
  std::string kind = "onset";
  std::string method = "naive-sgd";
  std::string mode = "sigma_exp";
  std::string cores = "100";
  std::size_t rank = 2;
  int dim = 2;
  std::size_t batch = 32;
  double lr = 5e-3;
  double init_std = 1.0;
  std::uint64_t budget = 10000;
  std::size_t trials = 500;
};

int run_diag(const DiagOpts& opts) {
  const ptn::PositivityMode mode = parse_mode_or_throw(opts.mode);
  json config{{"subcommand", "diag"}, {"kind", opts.kind},         {"method", opts.method},
              {"mode", opts.mode},    {"cores", opts.cores},       {"rank", opts.rank},
              {"dim", opts.dim},      {"batch", opts.batch},       {"lr", opts.lr},
              {"init_std", opts.init_std}, {"budget", opts.budget}, {"trials", opts.trials},
              {"seed", opts.common.seed}};
  const fs::path dir = prepare_run_dir(opts.common, "diag", config);
  const auto n_values = parse_size_list(opts.cores);

  if (opts.kind == "onset") {
    if (opts.method != "scaled-sgd" && opts.method != "naive-sgd")
      throw ptn::config_error("diag onset method must be scaled-sgd or naive-sgd");
    ptn::OnsetConfig oc;
    oc.rank = opts.rank;
    oc.dim = opts.dim;
    oc.batch_size = opts.batch;
    oc.learning_rate = opts.lr;
    oc.init_std = opts.init_std;
    oc.seed = opts.common.seed;
    const auto method = opts.method == "naive-sgd" ? ptn::TrainMethod::naive_sgd
                                                   : ptn::TrainMethod::scaled_sgd;
    const auto reports = ptn::overflow_onset(method, mode, n_values, opts.budget, oc);
    std::ofstream csv(dir / "onset.csv", std::ios::trunc);
    ptn::write_bench_csv_header(csv);
    for (const auto& r : reports) {
      ptn::BenchResult row;
      row.method = ptn::BenchMethod::scaled_sgd;
      row.n_cores = r.n_cores;
      row.rank = opts.rank;
      row.dim = opts.dim;
      row.batch = opts.batch;
      row.iterations_reached = r.max_iterations_reached;
      ptn::write_bench_csv_row(csv, row);
      std::cout << "n=" << r.n_cores << " iterations_reached=" << r.max_iterations_reached
                << " instability=" << r.instability_value << '\n';
    }
    return kExitOk;
  }
  if (opts.kind == "growth") {
    const auto curve =
        ptn::mc_growth(mode, n_values, opts.rank, opts.dim, opts.trials, opts.common.seed);
    std::ofstream csv(dir / "growth.csv", std::ios::trunc);
    ptn::write_growth_csv(csv, opts.mode, curve);
    std::cout << "statistic=" << curve.statistic << " slope=" << ptn::fitted_slope(curve)
              << '\n';
    return kExitOk;
  }
  throw ptn::config_error("diag kind must be onset or growth");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic tensor networks: training, evaluation and sampling"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model and write a checkpoint");
  add_common(train_cmd, train_opts.common);
  train_cmd->add_option("--data", train_opts.data_path, "Training data file")->required();
  train_cmd->add_option("--valid", train_opts.valid_path, "Validation data file");
  train_cmd->add_option("--test", train_opts.test_path, "Test data file (evaluated at the end)");
  train_cmd->add_option("--mode", train_opts.mode, "Positivity mode");
  train_cmd->add_option("--method", train_opts.method, "scaled-sgd, naive-sgd or dmrg");
  train_cmd->add_option("--optimizer", train_opts.optimizer, "sgd or adam");
  train_cmd->add_option("--rank", train_opts.rank, "Bond dimension");
  train_cmd->add_option("--dim", train_opts.dim_override, "Uniform input-leg cardinality");
  train_cmd->add_option("--lr", train_opts.lr, "Learning rate");
  train_cmd->add_option("--batch", train_opts.batch, "Batch size");
  train_cmd->add_option("--epochs", train_opts.epochs, "Epochs");
  train_cmd->add_option("--init-std", train_opts.init_std,
                        "Init stddev (<= 0 selects 1/sqrt(rank))");
  train_cmd->add_option("--grad-clip", train_opts.grad_clip, "Global gradient-norm clip");
  train_cmd->add_option("--dmrg-cutoff", train_opts.dmrg_cutoff,
                        "Relative singular-value cutoff (dmrg)");
  train_cmd->add_option("--max-iterations", train_opts.max_iterations,
                        "Stop after this many mini-batch steps");

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "NLL of a checkpoint on a dataset");
  add_common(eval_cmd, eval_opts.common);
  eval_cmd->add_option("--ckpt", eval_opts.ckpt_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_opts.data_path, "Dataset file")->required();

  SampleOpts sample_opts;
  CLI::App* sample_cmd = app.add_subcommand("sample", "Draw samples from a checkpoint");
  add_common(sample_cmd, sample_opts.common);
  sample_cmd->add_option("--ckpt", sample_opts.ckpt_path, "Checkpoint file")->required();
  sample_cmd->add_option("--count", sample_opts.count, "Number of samples");
  sample_cmd->add_flag("--backward", sample_opts.backward,
                       "Sample positions last-to-first instead of first-to-last");

  BenchOpts bench_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Latency/memory of one full update");
  add_common(bench_cmd, bench_opts.common);
  bench_cmd->add_option("--method", bench_opts.method, "scaled-sgd or dmrg");
  bench_cmd->add_option("--cores", bench_opts.cores, "Comma-separated chain lengths");
  bench_cmd->add_option("--rank", bench_opts.rank, "Bond dimension");
  bench_cmd->add_option("--dim", bench_opts.dim, "Input-leg cardinality");
  bench_cmd->add_option("--batch", bench_opts.batch, "Batch size");
  bench_cmd->add_option("--reps", bench_opts.reps, "Repetitions per configuration");

  DiagOpts diag_opts;
  CLI::App* diag_cmd = app.add_subcommand("diag", "Overflow-onset and growth-curve grids");
  add_common(diag_cmd, diag_opts.common);
  diag_cmd->add_option("--kind", diag_opts.kind, "onset or growth");
  diag_cmd->add_option("--method", diag_opts.method, "scaled-sgd or naive-sgd (onset)");
  diag_cmd->add_option("--mode", diag_opts.mode, "Positivity mode");
  diag_cmd->add_option("--cores", diag_opts.cores, "Comma-separated chain lengths");
  diag_cmd->add_option("--rank", diag_opts.rank, "Bond dimension");
  diag_cmd->add_option("--dim", diag_opts.dim, "Input-leg cardinality");
  diag_cmd->add_option("--batch", diag_opts.batch, "Batch size (onset)");
  diag_cmd->add_option("--lr", diag_opts.lr, "Learning rate (onset)");
  diag_cmd->add_option("--init-std", diag_opts.init_std, "Init stddev");
  diag_cmd->add_option("--budget", diag_opts.budget, "Iteration budget (onset)");
  diag_cmd->add_option("--trials", diag_opts.trials, "Monte-Carlo trials (growth)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_opts);
    if (eval_cmd->parsed()) return run_eval(eval_opts);
    if (sample_cmd->parsed()) return run_sample(sample_opts);
    if (bench_cmd->parsed()) return run_bench(bench_opts);
    if (diag_cmd->parsed()) return run_diag(diag_opts);
  } catch (const ptn::config_error& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ptn::argument_error& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ptn::parse_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const ptn::io_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const ptn::index_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const ptn::shape_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const ptn::zero_amplitude_error& e) {
    std::cerr << "error: numerical: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ptn::numerical_error& e) {
    std::cerr << "error: numerical: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
