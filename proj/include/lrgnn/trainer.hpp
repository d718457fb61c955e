#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lrgnn/mpgnn.hpp"
#include "lrgnn/objective.hpp"
#include "lrgnn/scenario.hpp"

namespace lrgnn {

/// Which parameters train() returns.
enum class Selection {
  best_test,   // highest test sum rate among evaluated epochs (and the initial model)
  best_train,  // lowest epoch-mean training loss; never looks at the test set
  last,
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  MpgnnArch arch;
  std::size_t eval_every = 1;
  std::filesystem::path checkpoint_path;  // empty: no checkpoint file
  Selection selection = Selection::best_test;
  bool deterministic = false;
  std::size_t workers = 0;  // 0: worker_count(deterministic)
  ObjectiveOptions objective;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;     // mean loss over the epoch's batches
  double test_sum_rate = 0.0;  // last evaluated value when !evaluated
  bool evaluated = false;
};

struct TrainReport {
  double initial_train_loss = 0.0;
  double initial_test_sum_rate = 0.0;
  std::vector<EpochRecord> epochs;  // one per training epoch
  std::size_t best_epoch = 0;       // 0 = initial parameters
  double best_test_sum_rate = 0.0;  // test sum rate of the returned parameters
  std::size_t samples_seen = 0;
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;       // of the returned parameters
};

/// Equality of everything except wall time.

bool same_results(const TrainReport& a, const TrainReport& b);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called with the training-set indices of every mini-batch.
using BatchObserver = std::function<void(std::size_t epoch, std::span<const std::size_t> indices)>;

struct TrainResult {
  MpgnnParams params;  // rounded to float precision, identical to the checkpoint file
  TrainReport report;
};

/// Minimizes the negative mean weighted sum rate with Adam over seeded
/// shuffled mini-batches. Throws TrainingError on a non-finite batch loss.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> test_set,
                  const TrainConfig& cfg, const BatchObserver& observer = {});

/// Mean weighted sum rate of the model over `samples`. Throws on an empty set.
double evaluate(const MpgnnParams& params, const MpgnnArch& arch, std::span<const Sample> samples,
                std::size_t workers = 1, const ObjectiveOptions& opts = {});

/// Per-sample weighted sum rates.
std::vector<double> evaluate_samples(const MpgnnParams& params, const MpgnnArch& arch,
                                     std::span<const Sample> samples, std::size_t workers = 1,
                                     const ObjectiveOptions& opts = {});

/// Mean weighted sum rate of a baseline beamformer (random uses seed ^ sample index).
double evaluate_baseline(BaselineKind kind, double p_max, std::span<const Sample> samples,
                         std::uint64_t seed = 0, const ObjectiveOptions& opts = {});

/// evaluate(low-rank) / evaluate(dense) on the same test set. Throws
/// std::domain_error when the dense rate is not positive.
double normalized_sum_rate(const MpgnnParams& lr_params, const MpgnnArch& lr_arch,
                           const MpgnnParams& dense_params, const MpgnnArch& dense_arch,
                           std::span<const Sample> test_set, std::size_t workers = 1);

/// Loss and accumulated parameter gradients of one batch (mean over samples).
double batch_gradient(const MpgnnParams& params, const MpgnnArch& arch,
                      std::span<const Sample> samples, std::span<const std::size_t> indices,
                      MpgnnParams& grads, std::size_t workers = 1,
                      const ObjectiveOptions& opts = {});

/// FNV-1a over the bit patterns of every parameter.
std::uint64_t params_checksum(const MpgnnParams& params);

/// Columns epoch,loss,test_sum_rate; row 0 describes the untrained model.
void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path);

}  // namespace lrgnn
