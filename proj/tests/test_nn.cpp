#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lrgnn/adam.hpp"
#include "lrgnn/nn.hpp"
#include "support.hpp"

using namespace lrgnn;
using namespace lrgnn::nn;
using lrgnn::testing::close_rel;

namespace {

Linear dense(std::size_t d_in, std::size_t d_out, std::vector<double> w, std::vector<double> b) {
  DenseLinear l(d_in, d_out);
  l.weight = std::move(w);
  l.bias = std::move(b);
  return Linear(std::move(l));
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double stddev(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Loss sum_o c_o y_o of an MLP; analytic gradients vs central differences.
void check_mlp_gradients(Mlp mlp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  mlp.init(rng);
  for (auto arr : mlp.arrays()) {
    for (double& v : arr) v += 0.05 * std::normal_distribution<double>()(rng);
  }
  const auto x = random_vector(rng, mlp.in_dim());
  const auto c = random_vector(rng, mlp.out_dim());
  auto loss = [&](const Mlp& m) {
    const auto y = m.forward(x);
    return std::inner_product(y.begin(), y.end(), c.begin(), 0.0);
  };

  MlpCache cache;
  mlp.forward(x, cache);
  Mlp grad = mlp.zeros_like();
  std::vector<double> dx(x.size());
  mlp.backward(cache, c, grad, dx);

  const double h = 1e-5;
  auto params = mlp.arrays();
  const auto grads = grad.arrays();
  for (std::size_t a = 0; a < params.size(); ++a) {
    for (std::size_t i = 0; i < params[a].size(); ++i) {
      const double saved = params[a][i];
      params[a][i] = saved + h;
      const double up = loss(mlp);
      params[a][i] = saved - h;
      const double down = loss(mlp);
      params[a][i] = saved;
      CHECK(close_rel(grads[a][i], (up - down) / (2 * h), 1e-5, 1e-7));
    }
  }
  auto xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    auto yu = mlp.forward(xp);
    xp[i] = x[i] - h;
    auto yd = mlp.forward(xp);
    xp[i] = x[i];
    const double num = (std::inner_product(yu.begin(), yu.end(), c.begin(), 0.0) -
                        std::inner_product(yd.begin(), yd.end(), c.begin(), 0.0)) /
                       (2 * h);
    CHECK(close_rel(dx[i], num, 1e-5, 1e-7));
  }
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("dense forward examples") {
  CHECK(dense(2, 2, {1, 0, 0, 1}, {0, 0}).forward(std::vector<double>{3, -1}) == std::vector<double>{3, -1});
  CHECK(dense(2, 2, {0, 0, 0, 0}, {5, 5}).forward(std::vector<double>{7, -2}) == std::vector<double>{5, 5});
  CHECK(dense(2, 2, {1, 2, 3, 4}, {1, 0}).forward(std::vector<double>{1, 1}) == std::vector<double>{4, 7});
}

TEST_CASE("low-rank forward example") {
  LowRankLinear l(2, 2, 1);
  l.u = {1, 2};
  l.v = {3, 4};
  CHECK(Linear(l).forward(std::vector<double>{1, 1}) == std::vector<double>{9, 12});
}

TEST_CASE("full rank with U = I recovers the dense layer") {
  const std::vector<double> w = {1, 2, 3, 4};  // d_out x d_in
  LowRankLinear l(2, 2, 2);
  l.u = {1, 0, 0, 1};
  l.v = {w[0], w[2], w[1], w[3]};  // W^T
  l.bias = {0.5, -0.5};
  const Linear lr(l);
  const auto ref = dense(2, 2, w, {0.5, -0.5});
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_vector(rng, 2);
    CHECK(lr.forward(x) == ref.forward(x));
  }
  CHECK(lr.effective_weight() == w);
}

TEST_CASE("random low-rank layer equals its materialized weight") {
  std::mt19937_64 rng(7);
  const std::size_t d_in = 13, d_out = 9, r = 4;
  LowRankLinear l(d_in, d_out, r);
  l.u = random_vector(rng, d_in * r);
  l.v = random_vector(rng, r * d_out);
  l.bias = random_vector(rng, d_out);
  // W_eff[o][i] = sum_k U[i][k] V[k][o], built here without the library
  std::vector<double> w(d_out * d_in, 0.0);
  for (std::size_t o = 0; o < d_out; ++o)
    for (std::size_t i = 0; i < d_in; ++i)
      for (std::size_t k = 0; k < r; ++k) w[o * d_in + i] += l.u[i * r + k] * l.v[k * d_out + o];
  const auto ref = dense(d_in, d_out, w, l.bias);
  const Linear lr(l);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_vector(rng, d_in);
    const auto a = lr.forward(x);
    const auto b = ref.forward(x);
    for (std::size_t o = 0; o < d_out; ++o) CHECK(close_rel(a[o], b[o], 1e-6, 1e-12));
  }
  const auto eff = lr.effective_weight();
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(close_rel(eff[i], w[i], 1e-12, 1e-14));
}

TEST_CASE("parameter counts") {
  CHECK(Linear(DenseLinear(3072, 64)).param_count(false) == 196608);
  CHECK(Linear(DenseLinear(3072, 64)).param_count(true) == 196608 + 64);
  CHECK(Linear(LowRankLinear(3072, 64, 4)).param_count(false) == 12544);
  CHECK(Linear(LowRankLinear(3072, 64, 4)).param_count(true) == 12544 + 64);
}

TEST_CASE("rank bounds") {
  CHECK_THROWS_AS(LowRankLinear(4, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(LowRankLinear(4, 3, 4), std::invalid_argument);
  CHECK_NOTHROW(LowRankLinear(4, 3, 3));
  CHECK_NOTHROW(LowRankLinear(4, 3, 9, RankCheck::overcomplete));
  CHECK_THROWS_AS(LowRankLinear(4, 3, 0, RankCheck::overcomplete), std::invalid_argument);
}

TEST_CASE("scalar chain rule") {
  const auto layer = dense(1, 1, {3}, {0});
  const std::vector<double> x = {1};
  const auto y = layer.forward(x);
  Linear grad = layer.zeros_like();
  const std::vector<double> dy = {2 * y[0]};  // d(y^2)/dy
  layer.backward(x, dy, grad, {});
  CHECK(grad.as_dense()->weight[0] == 6.0);
  CHECK(grad.as_dense()->bias[0] == 6.0);

  Linear zero_grad = layer.zeros_like();
  const std::vector<double> none = {0.0};
  layer.backward(x, none, zero_grad, {});
  CHECK(zero_grad.as_dense()->weight[0] == 0.0);
  CHECK(zero_grad.as_dense()->bias[0] == 0.0);
}

TEST_CASE("backward accumulates") {
  const auto layer = dense(2, 1, {1, 1}, {0});
  const std::vector<double> x = {2, 3};
  const std::vector<double> dy = {1};
  Linear grad = layer.zeros_like();
  layer.backward(x, dy, grad, {});
  layer.backward(x, dy, grad, {});
  CHECK(grad.as_dense()->weight == std::vector<double>{4, 6});
}

TEST_CASE("MLP gradients match finite differences") {
  const std::vector<std::size_t> dims = {7, 11, 5};
  check_mlp_gradients(Mlp::make(dims, LayerKind::dense, 0, Activation::none), 1);
  check_mlp_gradients(Mlp::make(dims, LayerKind::dense, 0, Activation::sigmoid), 2);
  check_mlp_gradients(Mlp::make(dims, LayerKind::low_rank, 3, Activation::relu), 3);
  check_mlp_gradients(Mlp::make(dims, LayerKind::low_rank, 2, Activation::sigmoid), 4);
}

TEST_CASE("MLP rejects mismatched layers") {
  std::vector<Linear> layers;
  layers.emplace_back(DenseLinear(3, 4));
  layers.emplace_back(DenseLinear(5, 2));
  CHECK_THROWS_AS(Mlp(std::move(layers), Activation::none), std::invalid_argument);
  std::vector<Linear> mixed;
  mixed.emplace_back(DenseLinear(3, 4));
  mixed.emplace_back(LowRankLinear(4, 2, 1));
  CHECK_THROWS_AS(Mlp(std::move(mixed), Activation::none), std::invalid_argument);
}

TEST_CASE("sigmoid is stable at extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-1000.0) >= 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-1000.0)));
}

TEST_CASE("Adam first step moves by lr against the gradient") {
  std::vector<double> w = {0.0, 1.0, -2.0};
  const std::vector<double> g = {1.0, 1.0, 1.0};
  Adam adam(AdamConfig{.lr = 0.01});
  const std::vector<std::span<double>> params = {w};
  const std::vector<std::span<const double>> grads = {g};
  adam.step(params, grads);
  CHECK(w[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(w[2] == doctest::Approx(-2.01).epsilon(1e-6));
  CHECK(adam.steps() == 1);
}

TEST_CASE("Adam leaves parameters alone under zero gradients") {
  std::vector<double> w = {0.3, -0.7};
  const std::vector<double> g = {0.0, 0.0};
  Adam adam;
  for (int i = 0; i < 10; ++i) adam.step(std::vector<std::span<double>>{w}, std::vector<std::span<const double>>{g});
  CHECK(w == std::vector<double>{0.3, -0.7});
}

TEST_CASE("Adam minimizes a scalar quadratic") {
  std::vector<double> w = {0.0};
  std::vector<double> g = {0.0};
  Adam adam(AdamConfig{.lr = 0.1});
  for (int i = 0; i < 100; ++i) {
    g[0] = 2.0 * (w[0] - 2.0);
    adam.step(std::vector<std::span<double>>{w}, std::vector<std::span<const double>>{g});
  }
  CHECK(std::abs(w[0] - 2.0) < 0.5);
}

TEST_CASE("Adam update is elementwise") {
  // Permuting parameters and gradients permutes the update.
  std::vector<double> a = {1, 2, 3}, ga = {0.5, -1, 2};
  std::vector<double> b = {3, 1, 2}, gb = {2, 0.5, -1};
  Adam x, y;
  for (int i = 0; i < 5; ++i) {
    x.step(std::vector<std::span<double>>{a}, std::vector<std::span<const double>>{ga});
    y.step(std::vector<std::span<double>>{b}, std::vector<std::span<const double>>{gb});
  }
  CHECK(a[0] == b[1]);
  CHECK(a[1] == b[2]);
  CHECK(a[2] == b[0]);
}

TEST_CASE("Adam refuses non-finite gradients without touching parameters") {
  std::vector<double> w = {1.0, 2.0};
  std::vector<double> g = {0.1, std::nan("")};
  Adam adam;
  CHECK_THROWS_AS(adam.step(std::vector<std::span<double>>{w}, std::vector<std::span<const double>>{g}),
                  std::runtime_error);
  CHECK(w == std::vector<double>{1.0, 2.0});
}

TEST_CASE("fan-based init statistics") {
  Linear layer{DenseLinear(3072, 64)};
  std::mt19937_64 rng(5);
  layer.init(rng);
  const double bound = std::sqrt(6.0 / (3072 + 64));
  const auto& w = layer.as_dense()->weight;
  CHECK(stddev(w) == doctest::Approx(std::sqrt(bound * bound / 3.0)).epsilon(0.10));
  for (double v : w) CHECK_UNARY(std::abs(v) <= bound);
  for (double b : layer.as_dense()->bias) CHECK(b == 0.0);

  Linear lr{LowRankLinear(3072, 64, 8)};
  lr.init(rng);
  const double bu = std::sqrt(6.0 / (3072 + 8));
  const double bv = std::sqrt(6.0 / (8 + 64));
  CHECK(stddev(lr.as_low_rank()->u) == doctest::Approx(bu / std::sqrt(3.0)).epsilon(0.10));
  CHECK(stddev(lr.as_low_rank()->v) == doctest::Approx(bv / std::sqrt(3.0)).epsilon(0.10));
}

TEST_CASE("init is deterministic in the seed") {
  Linear a{DenseLinear(10, 6)}, b{DenseLinear(10, 6)}, c{DenseLinear(10, 6)};
  std::mt19937_64 r1(3), r2(3), r3(4);
  a.init(r1);
  b.init(r2);
  c.init(r3);
  CHECK(a.as_dense()->weight == b.as_dense()->weight);
  CHECK(a.as_dense()->weight != c.as_dense()->weight);
}

}  // TEST_SUITE
