#include <doctest.h>

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "lrgnn/model_io.hpp"
#include "lrgnn/parallel.hpp"
#include "lrgnn/trainer.hpp"
#include "support.hpp"

using namespace lrgnn;
namespace fs = std::filesystem;

namespace {

struct Data {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

Data small_data(std::size_t n_train, std::size_t n_test, std::size_t nt = 4) {
  ScenarioConfig cfg;
  cfg.n_tx_antennas = nt;
  return {generate_samples(cfg, 0, 0, n_train), generate_samples(cfg, 0, n_train, n_test)};
}

TrainConfig quick_config(std::size_t nt, std::size_t epochs) {
  TrainConfig tc;
  tc.arch = MpgnnArch::dense(nt);
  tc.epochs = epochs;
  tc.batch_size = 8;
  tc.deterministic = true;
  return tc;
}

bool same_bits(const MpgnnParams& a, const MpgnnParams& b) {
  const auto x = a.arrays();
  const auto y = b.arrays();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != y[i].size() || std::memcmp(x[i].data(), y[i].data(), x[i].size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lrgnn_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("zero learning rate keeps the initial parameters") {
  const auto data = small_data(16, 4);
  auto tc = quick_config(4, 3);
  tc.lr = 0.0;
  tc.selection = Selection::last;
  const auto result = train(data.train, data.test, tc);
  auto init = init_params(tc.arch, tc.seed);
  round_to_f32(init);
  CHECK(same_bits(result.params, init));
}

TEST_CASE("same seed and config give the same report") {
  const auto data = small_data(24, 8);
  auto tc = quick_config(4, 3);
  tc.arch = MpgnnArch::low_rank(4, 3, 2);
  const auto a = train(data.train, data.test, tc);
  const auto b = train(data.train, data.test, tc);
  CHECK(same_results(a.report, b.report));
  CHECK(same_bits(a.params, b.params));
  tc.seed = 1;
  const auto c = train(data.train, data.test, tc);
  CHECK(a.report.checksum != c.report.checksum);
}

TEST_CASE("mini-batches only ever index the training set") {
  const auto data = small_data(21, 5);
  auto tc = quick_config(4, 2);
  std::vector<std::multiset<std::size_t>> seen(3);
  const auto result = train(data.train, data.test, tc, [&](std::size_t epoch, std::span<const std::size_t> idx) {
    CHECK(idx.size() <= tc.batch_size);
    seen.at(epoch).insert(idx.begin(), idx.end());
  });
  for (std::size_t e : {1, 2}) {
    CHECK(seen[e].size() == 21);
    std::set<std::size_t> unique(seen[e].begin(), seen[e].end());
    CHECK(unique.size() == 21);
    CHECK(*unique.rbegin() == 20);
  }
  CHECK(result.report.samples_seen == 42);
}

TEST_CASE("best-train selection never evaluates a poisoned test set") {
  auto data = small_data(12, 3);
  for (auto& s : data.test) s.scenario.channels[0] = {std::nan(""), 0.0};
  auto tc = quick_config(4, 2);
  tc.selection = Selection::best_train;
  // the test set is still scored for the report, which is allowed to be NaN
  const auto result = train(data.train, data.test, tc);
  CHECK(result.report.best_epoch <= 2);
}

TEST_CASE("checkpoint matches the returned parameters") {
  const auto data = small_data(16, 4);
  auto tc = quick_config(4, 3);
  tc.checkpoint_path = temp_file("ckpt.lrgm");
  const auto result = train(data.train, data.test, tc);
  const auto loaded = load_model(tc.checkpoint_path);
  CHECK(same_bits(loaded.params, result.params));
  CHECK(params_checksum(loaded.params) == result.report.checksum);
}

TEST_CASE("a non-finite loss stops training") {
  auto data = small_data(8, 2);
  data.train[3].scenario.channels[0] = {std::nan(""), 0.0};
  auto tc = quick_config(4, 1);
  tc.selection = Selection::last;
  CHECK_THROWS_AS(train(data.train, data.test, tc), TrainingError);
}

TEST_CASE("invalid configurations") {
  const auto data = small_data(4, 2);
  auto tc = quick_config(4, 1);
  tc.batch_size = 0;
  CHECK_THROWS(train(data.train, data.test, tc));
  tc = quick_config(8, 1);  // Nt mismatch
  CHECK_THROWS(train(data.train, data.test, tc));
  tc = quick_config(4, 1);
  CHECK_THROWS(train({}, data.test, tc));
}

TEST_CASE("evaluation") {
  const auto data = small_data(1, 3);
  const auto arch = MpgnnArch::dense(4);
  const auto params = init_params(arch, 3);
  const auto before = params_checksum(params);
  const double one = evaluate(params, arch, std::span(data.train).first(1));
  CHECK(one == weighted_sum_rate(data.train[0], forward(data.train[0].graph, params, arch)));
  const auto per = evaluate_samples(params, arch, data.test, 2);
  CHECK(evaluate(params, arch, data.test) == doctest::Approx((per[0] + per[1] + per[2]) / 3).epsilon(1e-15));
  CHECK(params_checksum(params) == before);
  CHECK(normalized_sum_rate(params, arch, params, arch, data.test) == 1.0);
  CHECK_THROWS(evaluate(params, arch, {}));
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
  const auto data = small_data(3, 0, 2);
  const auto arch = MpgnnArch::dense(2);
  const auto params = testing::random_params(arch, 2, 1.5);
  const std::vector<std::size_t> idx = {0, 1, 2};
  auto grads = params.zeros_like();
  const double l = batch_gradient(params, arch, data.train, idx, grads);
  double expected_loss = 0.0;
  std::vector<MpgnnParams> per;
  for (const auto& s : data.train) {
    expected_loss += testing::model_loss(params, arch, s) / 3.0;
    per.push_back(testing::model_gradient(params, arch, s));
  }
  CHECK(l == doctest::Approx(expected_loss).epsilon(1e-12));
  const auto g = grads.arrays();
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t i = 0; i < g[a].size(); ++i) {
      const double mean = (per[0].arrays()[a][i] + per[1].arrays()[a][i] + per[2].arrays()[a][i]) / 3.0;
      CHECK(testing::close_rel(g[a][i], mean, 1e-10, 1e-14));
    }
  }
  // same worker count, same bits
  auto again = params.zeros_like();
  auto third = params.zeros_like();
  batch_gradient(params, arch, data.train, idx, again, 2);
  batch_gradient(params, arch, data.train, idx, third, 2);
  CHECK(same_bits(again, third));
}

TEST_CASE("parallel_for covers the range once and rethrows") {
  std::vector<std::atomic<int>> hits(103);
  parallel_for(hits.size(), 4, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) ++hits[i];
  });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t b, std::size_t, std::size_t) {
                    if (b > 0) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  CHECK(worker_count(true) == 1);
}

TEST_CASE("report CSV starts with the untrained model") {
  const auto data = small_data(8, 2);
  auto tc = quick_config(4, 3);
  tc.eval_every = 2;
  const auto result = train(data.train, data.test, tc);
  CHECK(result.report.epochs.size() == 3);
  CHECK_FALSE(result.report.epochs[0].evaluated);
  CHECK(result.report.epochs[1].evaluated);
  CHECK(result.report.epochs[2].evaluated);  // last epoch always evaluated
  const auto path = temp_file("report.csv");
  write_train_report_csv(result.report, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,loss,test_sum_rate");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  std::getline(in, line);
  CHECK(line.back() == ',');  // epoch 1 not evaluated
}

TEST_CASE("training improves a dense model at desk scale") {
  ScenarioConfig cfg;
  const auto train_set = generate_samples(cfg, 0, 0, 200);
  const auto test_set = generate_samples(cfg, 0, 200, 50);
  TrainConfig tc;
  tc.arch = MpgnnArch::dense(8);
  tc.epochs = 30;
  tc.deterministic = true;
  const auto result = train(train_set, test_set, tc);
  CHECK(result.report.best_test_sum_rate >= 1.3 * result.report.initial_test_sum_rate);
  CHECK(result.report.best_test_sum_rate >= evaluate_baseline(BaselineKind::random, 1.0, test_set));
}

}  // TEST_SUITE
