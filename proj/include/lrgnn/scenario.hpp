#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lrgnn {

enum class LogBase { log10, log2 };
enum class WeightsMode { all_ones, uniform01 };

struct ScenarioConfig {
  std::size_t n_pairs = 3;
  std::size_t n_tx_antennas = 8;
  double area_side = 2000.0;       // meters
  double d_min = 10.0;             // meters
  double d_max = 100.0;            // meters
  double edge_threshold = 500.0;   // meters
  LogBase pathloss_log_base = LogBase::log10;
  double antenna_gain_dbi = 9.0;
  double shadow_sigma_db = 8.0;    // 0 disables shadowing
  double p_max = 1.0;
  double snr_db = 10.0;
  WeightsMode weights_mode = WeightsMode::all_ones;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

/// One network realization. Channels are stored as channels[(i * N + n) * Nt + k],
/// the k-th antenna coefficient of the channel from TX i to RX n.
struct Scenario {
  std::size_t n_pairs = 0;
  std::size_t n_tx = 0;
  std::vector<Point> tx_positions;
  std::vector<Point> rx_positions;
  std::vector<std::complex<double>> channels;
  std::vector<double> weights;
  std::vector<double> noise_powers;
  // Multiplier applied to the raw channels (noise scaled by its square).
  // Not persisted in dataset files; a loaded scenario reports 1.
  double scale_factor = 1.0;

  std::span<const std::complex<double>> channel(std::size_t tx, std::size_t rx) const {
    return {channels.data() + (tx * n_pairs + rx) * n_tx, n_tx};
  }
  std::span<std::complex<double>> channel(std::size_t tx, std::size_t rx) {
    return {channels.data() + (tx * n_pairs + rx) * n_tx, n_tx};
  }
};

/// Directed interference edge: TX `src` interferes at RX `dst`.
struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Graph view of a scenario.
///
/// vertex_features rows are [Re h_nn (Nt) | Im h_nn (Nt) | w_n | sigma_n^2].
/// edge_features rows are [Re h_in (Nt) | Im h_in (Nt)] for edge (i, n).
/// incoming[n] lists indices into `edges` with dst == n, ordered by source.
struct Graph {
  std::size_t n_vertices = 0;
  std::size_t n_tx = 0;
  std::vector<double> vertex_features;
  std::vector<Edge> edges;
  std::vector<double> edge_features;
  std::vector<std::vector<std::size_t>> incoming;

  std::size_t vertex_feature_dim() const { return 2 * n_tx + 2; }
  std::size_t edge_feature_dim() const { return 2 * n_tx; }

  std::span<const double> vertex_row(std::size_t n) const {
    return {vertex_features.data() + n * vertex_feature_dim(), vertex_feature_dim()};
  }
  std::span<const double> edge_row(std::size_t e) const {
    return {edge_features.data() + e * edge_feature_dim(), edge_feature_dim()};
  }
};

/// A scenario together with its interference graph; the unit stored in datasets.
struct Sample {
  Scenario scenario;
  Graph graph;
};

/// Path loss in dB at distance `d_km`: 148.1 + 37.6 log_base(d_km).
double path_loss_db(double d_km, LogBase base);

/// Draws one scenario. RNG consumption order (std::mt19937_64 seeded with `seed`):
///   1. TX positions: x then y, uniform over the square, per pair;
///   2. RX offsets: radius uniform in [d_min, d_max] then angle uniform in [0, 2pi), per pair;
///   3. for each ordered pair (i, n) in row-major order: one standard normal for
///      shadowing, then Nt complex fading draws (real part then imaginary part);
///   4. weights, only in uniform01 mode.
/// Channels are then normalized so the mean desired-channel power is 1 and every
/// stored real value is rounded to float precision.
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Edges (i, n), i != n, with |TX_i - RX_n| < threshold.
std::vector<Edge> interference_edges(const Scenario& s, double threshold);

/// Builds vertex/edge features for an explicit edge list.
Graph assemble_graph(const Scenario& s, std::vector<Edge> edges);

Graph build_graph(const Scenario& s, const ScenarioConfig& cfg);

Sample make_sample(const ScenarioConfig& cfg, std::uint64_t seed);

/// Samples [first, first + count) with per-sample seeds `seed ^ index`.
std::vector<Sample> generate_samples(const ScenarioConfig& cfg, std::uint64_t seed,
                                     std::size_t first, std::size_t count,
                                     std::size_t workers = 1);

std::string to_string(LogBase base);
std::string to_string(WeightsMode mode);
LogBase parse_log_base(const std::string& text);
WeightsMode parse_weights_mode(const std::string& text);

}  // namespace lrgnn
