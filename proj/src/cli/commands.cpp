#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>

#include "lrgnn/cli.hpp"
#include "lrgnn/compression.hpp"
#include "lrgnn/dataset.hpp"
#include "lrgnn/model_io.hpp"
#include "lrgnn/objective.hpp"
#include "lrgnn/parallel.hpp"
#include "lrgnn/trainer.hpp"

namespace fs = std::filesystem;

namespace lrgnn::cli {
namespace {

// Options shared by every subcommand: a config file, generic key=value
// overrides, and dedicated flags that map onto config keys. Flags win.
struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flags;
  bool deterministic = false;
  CLI::Option* deterministic_flag = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "plain-text key = value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override a config key (key=value), repeatable");
    deterministic_flag =
        cmd->add_flag("--deterministic", deterministic, "single-threaded, bit-reproducible run");
  }

  void flag(CLI::App* cmd, const std::string& name, const std::string& key, const std::string& help) {
    auto& slot = flag_values[key];
    flags.emplace_back(key, cmd->add_option(name, slot, help + " (config key: " + key + ")"));
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, opt] : flags) {
      if (opt->count() > 0) apply_setting(cfg, key, flag_values.at(key));
    }
    if (deterministic_flag->count() > 0) apply_setting(cfg, "deterministic", "true");
    return cfg;
  }
};

void write_config_echo(const RunConfig& cfg, const std::string& command, const fs::path& path) {
  auto j = to_json(cfg);
  j["command"] = command;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "-" : "") + std::to_string(dims[i]);
  return s;
}

std::string describe_arch(const MpgnnArch& arch) {
  if (!arch.is_low_rank()) return "dense";
  return "low-rank (a1=" + std::to_string(arch.rank_mlp1) + ", a2=" + std::to_string(arch.rank_mlp2) + ")";
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  ConfigOptions config;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  RunConfig cfg = a.config.resolve();
  cfg.output_dir = a.out;
  try {
    cfg.scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.n_train == 0 || cfg.n_test == 0) throw ConfigError("--train and --test must be >= 1");

  const fs::path dir(a.out);
  ensure_dir(dir);
  const std::size_t workers = worker_count(cfg.deterministic);
  const std::uint64_t seed = cfg.scenario.seed;
  const auto train = generate_samples(cfg.scenario, seed, 0, cfg.n_train, workers);
  const auto test = generate_samples(cfg.scenario, seed, cfg.n_train, cfg.n_test, workers);
  write_dataset(train, dir / "train.lrgd");
  write_dataset(test, dir / "test.lrgd");
  write_config_echo(cfg, "gen-data", dir / "config.json");
  out << "wrote " << train.size() << " training and " << test.size() << " test samples (N="
      << cfg.scenario.n_pairs << ", Nt=" << cfg.scenario.n_tx_antennas << ") to " << dir.string()
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  ConfigOptions config;
  std::string data_dir;
  std::string train_file;
  std::string test_file;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.resolve();
  cfg.output_dir = a.out;
  const fs::path train_path = a.train_file.empty() ? fs::path(a.data_dir) / "train.lrgd" : fs::path(a.train_file);
  const fs::path test_path = a.test_file.empty() ? fs::path(a.data_dir) / "test.lrgd" : fs::path(a.test_file);
  if (a.data_dir.empty() && (a.train_file.empty() || a.test_file.empty())) {
    throw ConfigError("pass --data <dir> or both --train-data and --test-data");
  }

  const auto train_set = read_dataset(train_path);
  const auto test_set = read_dataset(test_path);
  const std::size_t nt = train_set.front().scenario.n_tx;
  if (test_set.front().scenario.n_tx != nt) {
    err << "error: training and test sets disagree on Nt\n";
    return kExitFailure;
  }
  if (cfg.explicit_keys.contains("n_tx_antennas") && cfg.scenario.n_tx_antennas != nt) {
    err << "error: configured Nt=" << cfg.scenario.n_tx_antennas << " but the dataset has Nt=" << nt << '\n';
    return kExitFailure;
  }
  cfg.scenario.n_tx_antennas = nt;

  TrainConfig tc;
  tc.arch = parse_ranks(cfg.ranks, nt);
  tc.arch.p_max = cfg.scenario.p_max;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.eval_every = cfg.eval_every;
  tc.seed = cfg.scenario.seed;
  tc.selection = cfg.selection;
  tc.deterministic = cfg.deterministic;
  tc.objective.full_interference = cfg.full_interference;
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  tc.checkpoint_path = dir / "model.lrgm";
  const auto result = train(train_set, test_set, tc);
  write_train_report_csv(result.report, dir / "train_report.csv");
  write_config_echo(cfg, "train", dir / "config.json");

  const auto counts = count_model_params(tc.arch, false);
  out << std::setprecision(6);
  out << "architecture: " << describe_arch(tc.arch) << ", Nt=" << nt << ", "
      << counts.total << " bias-free parameters\n";
  out << "untrained test sum rate: " << result.report.initial_test_sum_rate << '\n';
  out << "selected epoch " << result.report.best_epoch << ", test sum rate "
      << result.report.best_test_sum_rate << '\n';
  out << "checksum: " << std::hex << result.report.checksum << std::dec << '\n';
  out << "wrote " << tc.checkpoint_path.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  ConfigOptions config;
  std::string model;
  std::string data;
  std::string reference;
  std::vector<std::string> baselines;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.resolve();
  const auto samples = read_dataset(a.data);
  auto model = load_model(a.model);
  model.arch.p_max = cfg.scenario.p_max;
  const std::size_t nt = samples.front().scenario.n_tx;
  if (model.arch.n_tx != nt) {
    err << "error: model expects Nt=" << model.arch.n_tx << " but the dataset has Nt=" << nt << '\n';
    return kExitFailure;
  }
  std::optional<LoadedModel> reference;
  if (!a.reference.empty()) {
    reference = load_model(a.reference);
    reference->arch.p_max = cfg.scenario.p_max;
    if (reference->arch.n_tx != nt) {
      err << "error: reference model expects Nt=" << reference->arch.n_tx << " but the dataset has Nt="
          << nt << '\n';
      return kExitFailure;
    }
  }
  std::vector<BaselineKind> baselines;
  for (const auto& b : a.baselines) baselines.push_back(parse_baseline(b));

  ObjectiveOptions opts;
  opts.full_interference = cfg.full_interference;
  const std::size_t workers = worker_count(cfg.deterministic);
  const auto rates = evaluate_samples(model.params, model.arch, samples, workers, opts);
  std::vector<double> ref_rates;
  if (reference) ref_rates = evaluate_samples(reference->params, reference->arch, samples, workers, opts);

  const fs::path dir(a.out);
  ensure_dir(dir);
  std::ofstream per(dir / "eval_samples.csv");
  std::ofstream summary(dir / "eval_summary.csv");
  if (!per || !summary) throw std::runtime_error("cannot write evaluation CSVs in '" + dir.string() + "'");
  per << std::setprecision(17);
  summary << std::setprecision(17);
  out << std::setprecision(6);

  per << "sample,sum_rate" << (reference ? ",reference_sum_rate" : "") << '\n';
  double mean = 0.0, ref_mean = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    per << i << ',' << rates[i];
    mean += rates[i];
    if (reference) {
      per << ',' << ref_rates[i];
      ref_mean += ref_rates[i];
    }
    per << '\n';
  }
  mean /= static_cast<double>(rates.size());
  ref_mean /= static_cast<double>(rates.size());

  summary << "metric,value\n";
  summary << "mean_sum_rate," << mean << '\n';
  out << "mean weighted sum rate: " << mean << '\n';
  if (reference) {
    if (!(ref_mean > 0.0)) {
      err << "error: reference model has a non-positive sum rate\n";
      return kExitFailure;
    }
    summary << "reference_mean_sum_rate," << ref_mean << '\n';
    summary << "normalized_sum_rate," << mean / ref_mean << '\n';
    out << "normalized to reference: " << mean / ref_mean << '\n';
  }
  for (BaselineKind kind : baselines) {
    const double b = evaluate_baseline(kind, cfg.scenario.p_max, samples, cfg.scenario.seed, opts);
    summary << "baseline_" << to_string(kind) << "_mean_sum_rate," << b << '\n';
    out << to_string(kind) << " baseline: " << b << '\n';
    if (b > 0.0) summary << "ratio_vs_" << to_string(kind) << ',' << mean / b << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  ConfigOptions config;
  std::string mode;
  std::size_t nt = 512;
  std::vector<std::size_t> a1 = compression::kTableA1;
  std::vector<std::size_t> a2 = compression::kTableA2;
  std::string model;
  std::size_t bins = 50;
  std::string out = ".";
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  if (a.mode == "size-table" || a.mode == "p-heatmap") {
    const auto grid = compression::size_ratio_table(a.nt, a.a1, a.a2);
    const bool ratios = a.mode == "size-table";
    const fs::path path = dir / (ratios ? "size_table.csv" : "p_heatmap.csv");
    compression::write_grid_csv(grid, ratios, path);
    out << "wrote " << path.string() << '\n';
    return kExitOk;
  }
  if (a.model.empty()) throw ConfigError("--mode " + a.mode + " needs --model");
  const auto model = load_model(a.model);
  const std::string stem = fs::path(a.model).stem().string();
  if (a.mode == "weights-hist") {
    const auto hist = compression::weight_histogram(model.params, a.bins);
    const fs::path path = dir / ("weights_hist_" + stem + ".csv");
    compression::write_histogram_csv(hist, path);
    compression::write_stats_csv(hist, dir / ("weights_stats_" + stem + ".csv"));
    out << "wrote " << path.string() << '\n';
  } else {
    const fs::path path = dir / ("svals_" + stem + ".csv");
    compression::write_spectra_csv(compression::layer_spectra(model.params), path);
    out << "wrote " << path.string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_inspect(const std::string& path, std::ostream& out) {
  const auto model = load_model(path);
  const auto bias_free = count_model_params(model.arch, false);
  const auto with_bias = count_model_params(model.arch, true);
  out << "model: " << path << '\n';
  out << "architecture: " << describe_arch(model.arch) << '\n';
  out << "Nt: " << model.arch.n_tx << '\n';
  out << "mlp1 dims: " << join_dims(model.arch.mlp1_dims()) << '\n';
  out << "mlp2 dims: " << join_dims(model.arch.mlp2_dims()) << '\n';
  out << "params (bias-free): " << bias_free.total << " (mlp1 " << bias_free.mlp1 << ", mlp2 "
      << bias_free.mlp2 << ")\n";
  out << "params (total): " << with_bias.total << '\n';
  out << "file size: " << compression::model_disk_size(path) << " bytes\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank message-passing GNN beamforming toolkit", "lrgnn"};
  app.require_subcommand(1);
  app.footer("Config keys: " + [] {
    std::string s;
    for (const auto& k : config_keys()) s += (s.empty() ? "" : ", ") + k;
    return s;
  }() + "\nEnvironment: LRGNN_THREADS caps the worker count.");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate train/test datasets");
  gen.config.attach(gen_cmd);
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen.config.flag(gen_cmd, "--train", "n_train", "training samples [2000]");
  gen.config.flag(gen_cmd, "--test", "n_test", "test samples [500]");
  gen.config.flag(gen_cmd, "--seed", "seed", "base seed [0]");
  gen.config.flag(gen_cmd, "--n-pairs", "n_pairs", "transceiver pairs N [3]");
  gen.config.flag(gen_cmd, "--nt", "n_tx_antennas", "transmit antennas Nt [8]");
  gen.config.flag(gen_cmd, "--snr-db", "snr_db", "SNR in dB [10]");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a dense or low-rank model");
  tr.config.attach(train_cmd);
  train_cmd->add_option("--data", tr.data_dir, "directory holding train.lrgd and test.lrgd");
  train_cmd->add_option("--train-data", tr.train_file, "training dataset file");
  train_cmd->add_option("--test-data", tr.test_file, "test dataset file");
  train_cmd->add_option("--out", tr.out, "output directory")->required();
  tr.config.flag(train_cmd, "--ranks", "ranks", "'dense' or 'a1,a2' [dense]");
  tr.config.flag(train_cmd, "--epochs", "epochs", "training epochs [50]");
  tr.config.flag(train_cmd, "--batch-size", "batch_size", "mini-batch size [64]");
  tr.config.flag(train_cmd, "--lr", "lr", "Adam learning rate [0.001]");
  tr.config.flag(train_cmd, "--seed", "seed", "init/shuffle seed [0]");
  tr.config.flag(train_cmd, "--eval-every", "eval_every", "epochs between test evaluations [1]");
  tr.config.flag(train_cmd, "--selection", "selection", "best_test | best_train | last [best_test]");
  tr.config.flag(train_cmd, "--nt", "n_tx_antennas", "expected Nt (checked against the data)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a dataset");
  ev.config.attach(eval_cmd);
  eval_cmd->add_option("--model", ev.model, "model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ev.data, "dataset file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--reference", ev.reference, "reference (dense) model for normalization")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--baseline", ev.baselines, "baseline beamformers: mrt, random, zero")
      ->check(CLI::IsMember({"mrt", "random", "zero"}));
  eval_cmd->add_option("--out", ev.out, "output directory")->required();

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "compression analytics");
  an.config.attach(analyze_cmd);
  analyze_cmd->add_option("--mode", an.mode, "size-table | p-heatmap | weights-hist | svals")
      ->required()
      ->check(CLI::IsMember({"size-table", "p-heatmap", "weights-hist", "svals"}));
  analyze_cmd->add_option("--nt", an.nt, "antennas for size-table / p-heatmap")->capture_default_str();
  analyze_cmd->add_option("--a1", an.a1, "a1 values")->delimiter(',');
  analyze_cmd->add_option("--a2", an.a2, "a2 values")->delimiter(',');
  analyze_cmd->add_option("--model", an.model, "model file for weights-hist / svals")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--bins", an.bins, "histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--out", an.out, "output directory")->capture_default_str();

  std::string inspect_model;
  auto* inspect_cmd = app.add_subcommand("inspect", "print architecture, parameter counts and file size");
  inspect_cmd->add_option("--model", inspect_model, "model file")->required();

  std::vector<const char*> argv{"lrgnn"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (train_cmd->parsed()) return cmd_train(tr, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ev, out, err);
    if (analyze_cmd->parsed()) return cmd_analyze(an, out);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_model, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lrgnn::cli
