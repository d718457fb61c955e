#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrgnn/scenario.hpp"
#include "support.hpp"

using namespace lrgnn;

namespace {

// Two single-antenna pairs with hand-placed endpoints.
Scenario two_pairs(Point tx0, Point rx0, Point tx1, Point rx1) {
  Scenario s;
  s.n_pairs = 2;
  s.n_tx = 1;
  s.tx_positions = {tx0, tx1};
  s.rx_positions = {rx0, rx1};
  s.channels.assign(4, {1.0, 0.0});
  s.weights = {1.0, 1.0};
  s.noise_powers = {0.1, 0.1};
  return s;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("path loss at 1 km is the constant term in either base") {
  CHECK(path_loss_db(1.0, LogBase::log10) == doctest::Approx(148.1).epsilon(1e-15));
  CHECK(path_loss_db(1.0, LogBase::log2) == doctest::Approx(148.1).epsilon(1e-15));
}

TEST_CASE("path loss at 100 m") {
  const double l = path_loss_db(0.1, LogBase::log10);
  CHECK(l == doctest::Approx(148.1 - 37.6).epsilon(1e-12));
  CHECK(std::pow(10.0, -l / 20.0) == doctest::Approx(2.985e-6).epsilon(1e-3));
  CHECK(path_loss_db(0.1, LogBase::log2) == doctest::Approx(148.1 + 37.6 * std::log2(0.1)).epsilon(1e-12));
}

TEST_CASE("generation is deterministic in the seed") {
  ScenarioConfig cfg;
  const auto a = generate_scenario(cfg, 42);
  const auto b = generate_scenario(cfg, 42);
  CHECK(a.channels == b.channels);
  CHECK(a.noise_powers == b.noise_powers);
  CHECK(a.scale_factor == b.scale_factor);
  const auto c = generate_scenario(cfg, 43);
  CHECK(a.channels != c.channels);
}

TEST_CASE("geometry and normalization hold on random draws") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioConfig cfg;
    cfg.n_pairs = 2 + seed % 6;
    cfg.n_tx_antennas = 1 + seed % 5;
    const auto s = generate_scenario(cfg, seed);
    double desired = 0.0;
    for (std::size_t n = 0; n < s.n_pairs; ++n) {
      const auto& tx = s.tx_positions[n];
      CHECK(tx.x >= 0.0);
      CHECK(tx.x <= cfg.area_side);
      CHECK(tx.y >= 0.0);
      CHECK(tx.y <= cfg.area_side);
      const double d = distance(tx, s.rx_positions[n]);
      CHECK(d >= cfg.d_min - 1e-3);
      CHECK(d <= cfg.d_max + 1e-3);
      CHECK(s.noise_powers[n] > 0.0);
      CHECK(s.weights[n] == 1.0);
      for (auto h : s.channel(n, n)) desired += std::norm(h);
    }
    for (auto h : s.channels) CHECK(std::isfinite(h.real()));
    CHECK(desired / static_cast<double>(s.n_pairs) == doctest::Approx(1.0).epsilon(1e-5));
    // sigma^2 = p_max / snr in normalized units (10 dB, p_max 1)
    CHECK(s.noise_powers[0] == doctest::Approx(0.1).epsilon(1e-6));
  }
}

TEST_CASE("uniform weights stay in [0, 1]") {
  ScenarioConfig cfg;
  cfg.weights_mode = WeightsMode::uniform01;
  cfg.n_pairs = 10;
  const auto s = generate_scenario(cfg, 3);
  for (double w : s.weights) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("single pair has one vertex and no edges") {
  ScenarioConfig cfg;
  cfg.n_pairs = 1;
  const auto sample = make_sample(cfg, 9);
  CHECK(sample.graph.n_vertices == 1);
  CHECK(sample.graph.edges.empty());
  CHECK(sample.graph.incoming.size() == 1);
  CHECK(sample.graph.incoming[0].empty());
}

TEST_CASE("pairs 600 m apart do not interfere at T_d = 500") {
  const auto s = two_pairs({0, 0}, {0, 1}, {600, 0}, {600, 1});
  CHECK(interference_edges(s, 500.0).empty());
}

TEST_CASE("pairs 10 m apart interfere both ways") {
  const auto s = two_pairs({0, 0}, {0, 1}, {10, 0}, {10, 1});
  const auto edges = interference_edges(s, 500.0);
  REQUIRE(edges.size() == 2);
  CHECK(std::find(edges.begin(), edges.end(), Edge{0, 1}) != edges.end());
  CHECK(std::find(edges.begin(), edges.end(), Edge{1, 0}) != edges.end());
}

TEST_CASE("edge set matches the distance rule and features mirror the channels") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    ScenarioConfig cfg;
    cfg.n_pairs = 6;
    cfg.n_tx_antennas = 3;
    cfg.area_side = 900.0;
    const auto sample = make_sample(cfg, seed);
    const auto& s = sample.scenario;
    const auto& g = sample.graph;
    std::size_t expected = 0;
    for (std::uint32_t i = 0; i < s.n_pairs; ++i) {
      for (std::uint32_t n = 0; n < s.n_pairs; ++n) {
        const bool near = i != n && distance(s.tx_positions[i], s.rx_positions[n]) < cfg.edge_threshold;
        const bool present = std::find(g.edges.begin(), g.edges.end(), Edge{i, n}) != g.edges.end();
        CHECK(near == present);
        expected += near;
      }
    }
    CHECK(g.edges.size() == expected);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto h = s.channel(g.edges[e].src, g.edges[e].dst);
      const auto row = g.edge_row(e);
      for (std::size_t k = 0; k < s.n_tx; ++k) {
        CHECK(row[k] == h[k].real());
        CHECK(row[s.n_tx + k] == h[k].imag());
      }
    }
    for (std::size_t n = 0; n < s.n_pairs; ++n) {
      const auto row = g.vertex_row(n);
      const auto h = s.channel(n, n);
      for (std::size_t k = 0; k < s.n_tx; ++k) {
        CHECK(row[k] == h[k].real());
        CHECK(row[s.n_tx + k] == h[k].imag());
      }
      CHECK(row[2 * s.n_tx] == s.weights[n]);
      CHECK(row[2 * s.n_tx + 1] == s.noise_powers[n]);
      const auto& in = g.incoming[n];
      for (std::size_t j = 0; j < in.size(); ++j) {
        CHECK(g.edges[in[j]].dst == n);
        if (j > 0) CHECK(g.edges[in[j - 1]].src < g.edges[in[j]].src);
      }
    }
  }
}

TEST_CASE("without shadowing the cross-channel power follows the path loss") {
  // E|g_k|^2 = 1, so averaging over antennas and many draws isolates the
  // large-scale gain ratio between an interfering and a desired link.
  ScenarioConfig cfg;
  cfg.n_pairs = 2;
  cfg.n_tx_antennas = 256;
  cfg.shadow_sigma_db = 0.0;
  double log_ratio_err = 0.0;
  const int draws = 40;
  for (int t = 0; t < draws; ++t) {
    const auto s = generate_scenario(cfg, 100 + t);
    auto power = [&](std::size_t i, std::size_t n) {
      double p = 0.0;
      for (auto h : s.channel(i, n)) p += std::norm(h);
      return p / static_cast<double>(s.n_tx);
    };
    auto gain_db = [&](std::size_t i, std::size_t n) {
      const double d_km = std::max(1.0, distance(s.tx_positions[i], s.rx_positions[n])) / 1000.0;
      return -path_loss_db(d_km, LogBase::log10);
    };
    const double measured = 10.0 * std::log10(power(0, 1) / power(0, 0));
    const double expected = gain_db(0, 1) - gain_db(0, 0);
    log_ratio_err += std::abs(measured - expected);
  }
  // Per-draw power estimates over 256 antennas fluctuate by about 0.4 dB.
  CHECK(log_ratio_err / draws < 1.0);
}

TEST_CASE("batch generation uses seed xor global index regardless of workers") {
  ScenarioConfig cfg;
  const auto serial = generate_samples(cfg, 5, 10, 7, 1);
  const auto threaded = generate_samples(cfg, 5, 10, 7, 3);
  REQUIRE(serial.size() == 7);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].scenario.channels == threaded[i].scenario.channels);
    CHECK(serial[i].scenario.channels == make_sample(cfg, 5 ^ (10 + i)).scenario.channels);
  }
}

TEST_CASE("invalid configurations are rejected") {
  ScenarioConfig cfg;
  cfg.n_pairs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.d_min = 200.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_tx_antennas = 0;
  CHECK_THROWS_AS(generate_scenario(cfg, 0), std::invalid_argument);
  cfg = {};
  cfg.shadow_sigma_db = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_log_base("ln"), std::invalid_argument);
  CHECK(parse_log_base("log2") == LogBase::log2);
}

}  // TEST_SUITE
