#include "lrgnn/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "lrgnn/adam.hpp"
#include "lrgnn/model_io.hpp"
#include "lrgnn/parallel.hpp"

namespace lrgnn {
namespace {

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ull;

void check_dataset(std::span<const Sample> samples, const MpgnnArch& arch, const char* what) {
  for (const auto& s : samples) {
    if (s.scenario.n_tx != arch.n_tx) {
      throw std::invalid_argument(std::string(what) + " sample has Nt=" +
                                  std::to_string(s.scenario.n_tx) + " but the model expects Nt=" +
                                  std::to_string(arch.n_tx));
    }
  }
}

void add_into(MpgnnParams& dst, const MpgnnParams& src) {
  auto d = dst.arrays();
  const auto s = src.arrays();
  for (std::size_t a = 0; a < d.size(); ++a) {
    for (std::size_t i = 0; i < d[a].size(); ++i) d[a][i] += s[a][i];
  }
}

void zero(MpgnnParams& p) {
  for (auto a : p.arrays()) std::fill(a.begin(), a.end(), 0.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be finite and >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  arch.validate();
}

bool same_results(const TrainReport& a, const TrainReport& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    const auto& x = a.epochs[e];
    const auto& y = b.epochs[e];
    if (x.epoch != y.epoch || x.train_loss != y.train_loss || x.test_sum_rate != y.test_sum_rate ||
        x.evaluated != y.evaluated) {
      return false;
    }
  }
  return a.initial_train_loss == b.initial_train_loss &&
         a.initial_test_sum_rate == b.initial_test_sum_rate && a.best_epoch == b.best_epoch &&
         a.best_test_sum_rate == b.best_test_sum_rate && a.samples_seen == b.samples_seen &&
         a.checksum == b.checksum;
}

std::vector<double> evaluate_samples(const MpgnnParams& params, const MpgnnArch& arch,
                                     std::span<const Sample> samples, std::size_t workers,
                                     const ObjectiveOptions& opts) {
  check_dataset(samples, arch, "evaluation");
  std::vector<double> rates(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto q = forward(samples[i].graph, params, arch);
      rates[i] = weighted_sum_rate(samples[i], q, opts);
    }
  });
  return rates;
}

double evaluate(const MpgnnParams& params, const MpgnnArch& arch, std::span<const Sample> samples,
                std::size_t workers, const ObjectiveOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  const auto rates = evaluate_samples(params, arch, samples, workers, opts);
  return std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
}

double evaluate_baseline(BaselineKind kind, double p_max, std::span<const Sample> samples,
                         std::uint64_t seed, const ObjectiveOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto q = baseline_beamformers(samples[i].scenario, kind, p_max, seed ^ i);
    sum += weighted_sum_rate(samples[i], q, opts);
  }
  return sum / static_cast<double>(samples.size());
}

double normalized_sum_rate(const MpgnnParams& lr_params, const MpgnnArch& lr_arch,
                           const MpgnnParams& dense_params, const MpgnnArch& dense_arch,
                           std::span<const Sample> test_set, std::size_t workers) {
  const double reference = evaluate(dense_params, dense_arch, test_set, workers);
  if (!(reference > 0.0)) {
    throw std::domain_error("reference model has a non-positive weighted sum rate");
  }
  return evaluate(lr_params, lr_arch, test_set, workers) / reference;
}

double batch_gradient(const MpgnnParams& params, const MpgnnArch& arch,
                      std::span<const Sample> samples, std::span<const std::size_t> indices,
                      MpgnnParams& grads, std::size_t workers, const ObjectiveOptions& opts) {
  if (indices.empty()) throw std::invalid_argument("empty batch");
  const double scale = -1.0 / static_cast<double>(indices.size());
  workers = std::clamp<std::size_t>(workers, 1, indices.size());

  std::vector<MpgnnParams> partial;
  partial.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) partial.push_back(w == 0 ? std::move(grads) : params.zeros_like());
  std::vector<double> loss_parts(workers, 0.0);

  parallel_for(indices.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t w) {
    Tape tape;
    std::vector<std::complex<double>> dq;
    for (std::size_t b = begin; b < end; ++b) {
      const Sample& s = samples[indices[b]];
      const auto q = forward(s.graph, params, arch, tape);
      dq.assign(q.q.size(), {0.0, 0.0});
      const double rate = weighted_sum_rate_gradient(s.scenario, s.graph.edges, q, scale, dq, opts);
      loss_parts[w] += scale * rate;
      backward(tape, params, dq, partial[w]);
    }
  });

  grads = std::move(partial[0]);
  for (std::size_t w = 1; w < workers; ++w) add_into(grads, partial[w]);
  return std::accumulate(loss_parts.begin(), loss_parts.end(), 0.0);
}

std::uint64_t params_checksum(const MpgnnParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto a : params.arrays()) {
    for (double v : a) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= bits & 0xffu;
        h *= 0x100000001b3ull;
        bits >>= 8;
      }
    }
  }
  return h;
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> test_set,
                  const TrainConfig& cfg, const BatchObserver& observer) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (test_set.empty() && cfg.selection == Selection::best_test) {
    throw std::invalid_argument("best-test selection needs a test set");
  }
  check_dataset(train_set, cfg.arch, "training");
  check_dataset(test_set, cfg.arch, "test");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t workers = cfg.workers ? cfg.workers : worker_count(cfg.deterministic);
  const std::size_t eval_workers = cfg.deterministic ? 1 : workers;
  auto test_rate = [&](const MpgnnParams& p) {
    return test_set.empty() ? 0.0 : evaluate(p, cfg.arch, test_set, eval_workers, cfg.objective);
  };

  MpgnnParams params = init_params(cfg.arch, cfg.seed);
  nn::Adam adam(nn::AdamConfig{.lr = cfg.lr});
  std::mt19937_64 shuffle_rng(cfg.seed ^ kShuffleStream);

  TrainReport report;
  report.initial_train_loss = -evaluate(params, cfg.arch, train_set, eval_workers, cfg.objective);
  report.initial_test_sum_rate = test_rate(params);

  MpgnnParams best = params;
  round_to_f32(best);
  double best_score = cfg.selection == Selection::best_train ? report.initial_train_loss
                                                             : report.initial_test_sum_rate;
  auto save_best = [&] {
    if (!cfg.checkpoint_path.empty()) save_model(cfg.arch, best, cfg.checkpoint_path);
  };
  save_best();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  MpgnnParams grads = params.zeros_like();
  double last_test = report.initial_test_sum_rate;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size, ++batch_index) {
      const std::size_t last = std::min(first + cfg.batch_size, order.size());
      std::span<const std::size_t> batch(order.data() + first, last - first);
      if (observer) observer(epoch, batch);

      zero(grads);
      const double batch_loss =
          batch_gradient(params, cfg.arch, train_set, batch, grads, workers, cfg.objective);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss " + std::to_string(batch_loss) + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      const auto grad_arrays = grads.arrays();
      const std::vector<std::span<const double>> const_grads(grad_arrays.begin(), grad_arrays.end());
      adam.step(params.arrays(), const_grads);
      loss_sum += batch_loss * static_cast<double>(batch.size());
      report.samples_seen += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.evaluated = !test_set.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (rec.evaluated) last_test = test_rate(params);
    rec.test_sum_rate = last_test;
    report.epochs.push_back(rec);

    bool improved = false;
    switch (cfg.selection) {
      case Selection::best_test:
        improved = rec.evaluated && rec.test_sum_rate > best_score;
        if (improved) best_score = rec.test_sum_rate;
        break;
      case Selection::best_train:
        improved = rec.train_loss < best_score;
        if (improved) best_score = rec.train_loss;
        break;
      case Selection::last:
        improved = epoch == cfg.epochs;
        break;
    }
    if (improved) {
      best = params;
      round_to_f32(best);
      report.best_epoch = epoch;
      save_best();
    }
  }

  report.best_test_sum_rate = test_rate(best);
  report.checksum = params_checksum(best);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(best), std::move(report)};
}

void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  out << "epoch,loss,test_sum_rate\n";
  out << 0 << ',' << report.initial_train_loss << ',' << report.initial_test_sum_rate << '\n';
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (e.evaluated) out << e.test_sum_rate;
    out << '\n';
  }
}

}  // namespace lrgnn
