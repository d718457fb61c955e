#include "lrgnn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "binary_io.hpp"
#include "lrgnn/parallel.hpp"

namespace lrgnn {
namespace {

// Cross-pair distances below this are clamped before evaluating the path loss.
constexpr double kMinPathLossDistanceKm = 1e-3;

double to_f32(double v) { return detail::round_f32(v); }

std::complex<double> to_f32(std::complex<double> v) {
  return {to_f32(v.real()), to_f32(v.imag())};
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  if (n_tx_antennas < 1) throw std::invalid_argument("n_tx_antennas must be >= 1");
  if (!(area_side > 0.0)) throw std::invalid_argument("area_side must be positive");
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  if (d_min > d_max) throw std::invalid_argument("d_min must not exceed d_max");
  if (d_max >= area_side) throw std::invalid_argument("d_max must be smaller than area_side");
  if (!(edge_threshold > 0.0)) throw std::invalid_argument("edge_threshold must be positive");
  if (!(p_max > 0.0)) throw std::invalid_argument("p_max must be positive");
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("shadow_sigma_db must be >= 0");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (!std::isfinite(antenna_gain_dbi)) throw std::invalid_argument("antenna_gain_dbi must be finite");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double path_loss_db(double d_km, LogBase base) {
  const double lg = base == LogBase::log10 ? std::log10(d_km) : std::log2(d_km);
  return 148.1 + 37.6 * lg;
}

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.n_pairs;
  const std::size_t nt = cfg.n_tx_antennas;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Scenario s;
  s.n_pairs = n;
  s.n_tx = nt;
  s.tx_positions.resize(n);
  s.rx_positions.resize(n);
  for (auto& p : s.tx_positions) {
    p.x = to_f32(unit(rng) * cfg.area_side);
    p.y = to_f32(unit(rng) * cfg.area_side);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = cfg.d_min + (cfg.d_max - cfg.d_min) * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    s.rx_positions[i].x = to_f32(s.tx_positions[i].x + radius * std::cos(angle));
    s.rx_positions[i].y = to_f32(s.tx_positions[i].y + radius * std::sin(angle));
  }

  const double gain = std::pow(10.0, cfg.antenna_gain_dbi / 10.0);
  const double fading_sd = std::sqrt(0.5);
  s.channels.resize(n * n * nt);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      const double d_km =
          std::max(distance(s.tx_positions[i], s.rx_positions[r]) / 1000.0, kMinPathLossDistanceKm);
      const double shadow = std::pow(10.0, cfg.shadow_sigma_db * normal(rng) / 10.0);
      const double amplitude =
          std::pow(10.0, -path_loss_db(d_km, cfg.pathloss_log_base) / 20.0) * std::sqrt(gain * shadow);
      for (auto& h : s.channel(i, r)) {
        const double re = fading_sd * normal(rng);
        const double im = fading_sd * normal(rng);
        h = amplitude * std::complex<double>(re, im);
      }
    }
  }

  s.weights.assign(n, 1.0);
  if (cfg.weights_mode == WeightsMode::uniform01) {
    for (auto& w : s.weights) w = to_f32(unit(rng));
  }

  double desired_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& h : s.channel(i, i)) desired_power += std::norm(h);
  }
  desired_power /= static_cast<double>(n);
  s.scale_factor = desired_power > 0.0 ? 1.0 / std::sqrt(desired_power) : 1.0;
  for (auto& h : s.channels) h = to_f32(h * s.scale_factor);

  // Mean desired power is 1 after normalization.
  const double noise = to_f32(cfg.p_max / std::pow(10.0, cfg.snr_db / 10.0));
  s.noise_powers.assign(n, noise);
  return s;
}

std::vector<Edge> interference_edges(const Scenario& s, double threshold) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < s.n_pairs; ++i) {
    for (std::size_t r = 0; r < s.n_pairs; ++r) {
      if (i == r) continue;
      if (distance(s.tx_positions[i], s.rx_positions[r]) < threshold) {
        edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)});
      }
    }
  }
  return edges;
}

Graph assemble_graph(const Scenario& s, std::vector<Edge> edges) {
  Graph g;
  g.n_vertices = s.n_pairs;
  g.n_tx = s.n_tx;
  const std::size_t nt = s.n_tx;

  g.vertex_features.resize(s.n_pairs * g.vertex_feature_dim());
  for (std::size_t v = 0; v < s.n_pairs; ++v) {
    double* row = g.vertex_features.data() + v * g.vertex_feature_dim();
    const auto h = s.channel(v, v);
    for (std::size_t k = 0; k < nt; ++k) {
      row[k] = h[k].real();
      row[nt + k] = h[k].imag();
    }
    row[2 * nt] = s.weights[v];
    row[2 * nt + 1] = s.noise_powers[v];
  }

  g.incoming.assign(s.n_pairs, {});
  g.edge_features.resize(edges.size() * g.edge_feature_dim());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [src, dst] = edges[e];
    if (src >= s.n_pairs || dst >= s.n_pairs || src == dst) {
      throw std::invalid_argument("edge references an invalid vertex pair");
    }
    double* row = g.edge_features.data() + e * g.edge_feature_dim();
    const auto h = s.channel(src, dst);
    for (std::size_t k = 0; k < nt; ++k) {
      row[k] = h[k].real();
      row[nt + k] = h[k].imag();
    }
    g.incoming[dst].push_back(e);
  }
  for (auto& list : g.incoming) {
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return edges[a].src < edges[b].src;
    });
  }
  g.edges = std::move(edges);
  return g;
}

Graph build_graph(const Scenario& s, const ScenarioConfig& cfg) {
  return assemble_graph(s, interference_edges(s, cfg.edge_threshold));
}

Sample make_sample(const ScenarioConfig& cfg, std::uint64_t seed) {
  Sample sample;
  sample.scenario = generate_scenario(cfg, seed);
  sample.graph = build_graph(sample.scenario, cfg);
  return sample;
}

std::vector<Sample> generate_samples(const ScenarioConfig& cfg, std::uint64_t seed,
                                     std::size_t first, std::size_t count, std::size_t workers) {
  cfg.validate();
  std::vector<Sample> out(count);
  parallel_for(count, workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = make_sample(cfg, seed ^ static_cast<std::uint64_t>(first + i));
    }
  });
  return out;
}

std::string to_string(LogBase base) { return base == LogBase::log10 ? "log10" : "log2"; }

std::string to_string(WeightsMode mode) {
  return mode == WeightsMode::all_ones ? "all_ones" : "uniform01";
}

LogBase parse_log_base(const std::string& text) {
  if (text == "log10") return LogBase::log10;
  if (text == "log2") return LogBase::log2;
  throw std::invalid_argument("unknown path-loss log base '" + text + "' (expected log10 or log2)");
}

WeightsMode parse_weights_mode(const std::string& text) {
  if (text == "all_ones") return WeightsMode::all_ones;
  if (text == "uniform01") return WeightsMode::uniform01;
  throw std::invalid_argument("unknown weights mode '" + text + "' (expected all_ones or uniform01)");
}

}  // namespace lrgnn
