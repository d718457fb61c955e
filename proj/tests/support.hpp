#pragma once

// Shared helpers for the unit and acceptance tests: tiny instances and
// independent reference computations (finite differences, a direct SINR).

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lrgnn/mpgnn.hpp"
#include "lrgnn/objective.hpp"
#include "lrgnn/scenario.hpp"

namespace lrgnn::testing {

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

/// Compact scenario config: pairs packed into a small square so every pair
/// interferes with every other one.
inline ScenarioConfig dense_config(std::size_t n_pairs, std::size_t n_tx) {
  ScenarioConfig cfg;
  cfg.n_pairs = n_pairs;
  cfg.n_tx_antennas = n_tx;
  cfg.area_side = 300.0;
  return cfg;
}

/// Loss of the full model on one sample: negative weighted sum rate.
inline double model_loss(const MpgnnParams& params, const MpgnnArch& arch, const Sample& s) {
  return -weighted_sum_rate(s, forward(s.graph, params, arch));
}

inline MpgnnParams model_gradient(const MpgnnParams& params, const MpgnnArch& arch, const Sample& s) {
  Tape tape;
  const auto q = forward(s.graph, params, arch, tape);
  std::vector<std::complex<double>> dq(q.q.size());
  weighted_sum_rate_gradient(s.scenario, s.graph.edges, q, -1.0, dq);
  MpgnnParams grads = params.zeros_like();
  backward(tape, params, dq, grads);
  return grads;
}

struct FdReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::size_t kinks = 0;  // mismatches explained by a one-sided derivative
  double worst_excess = 0.0;  // max |a - n| / allowed
  std::string worst;
};

/// Central differences on every parameter of `params` against model_gradient.
/// A ReLU or max switch inside [p - h, p + h] breaks the central difference;
/// with `kink_aware` such mismatches pass when the analytic value equals the
/// left or right derivative at a much smaller step.
inline FdReport fd_check_model(MpgnnParams params, const MpgnnArch& arch, const Sample& s,
                               double h = 1e-4, double rel = 1e-4, double abs_floor = 1e-6,
                               bool kink_aware = false) {
  const MpgnnParams grads = model_gradient(params, arch, s);
  const auto names = params.named_arrays();
  const auto g_arrays = grads.arrays();
  auto p_arrays = params.arrays();
  FdReport rep;
  for (std::size_t a = 0; a < p_arrays.size(); ++a) {
    auto p = p_arrays[a];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = model_loss(params, arch, s);
      p[i] = saved - h;
      const double down = model_loss(params, arch, s);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g_arrays[a][i];
      const double allowed = std::max(abs_floor, rel * std::max(std::abs(numeric), std::abs(analytic)));
      double excess = std::abs(numeric - analytic) / allowed;
      if (excess > 1.0 && kink_aware) {
        const double t = 1e-7;
        const double mid = model_loss(params, arch, s);
        p[i] = saved + t;
        const double right = (model_loss(params, arch, s) - mid) / t;
        p[i] = saved - t;
        const double left = (mid - model_loss(params, arch, s)) / t;
        p[i] = saved;
        if (close_rel(analytic, right, 1e-3, 1e-6) || close_rel(analytic, left, 1e-3, 1e-6)) {
          ++rep.kinks;
          excess = 0.0;
        }
      }
      ++rep.checked;
      if (excess > 1.0) ++rep.failures;
      if (excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst = names[a].name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return rep;
}

/// Straightforward SINR written independently of the library.
inline std::vector<double> reference_sinr(const Scenario& s, const std::vector<Edge>& edges,
                                          const BeamformingMatrix& q) {
  auto gain = [&](std::size_t tx, std::size_t rx) {
    std::complex<double> acc = 0.0;
    const auto h = s.channel(tx, rx);
    for (std::size_t k = 0; k < s.n_tx; ++k) acc += std::conj(h[k]) * q.row(tx)[k];
    return std::norm(acc);
  };
  std::vector<double> out(s.n_pairs);
  for (std::size_t n = 0; n < s.n_pairs; ++n) {
    double interference = 0.0;
    for (const auto& e : edges) {
      if (e.dst == n) interference += gain(e.src, n);
    }
    out[n] = gain(n, n) / (interference + s.noise_powers[n]);
  }
  return out;
}

/// Random parameters scaled up so sigmoids and the projection leave their
/// linear regimes.
inline MpgnnParams random_params(const MpgnnArch& arch, std::uint64_t seed, double scale = 1.0) {
  MpgnnParams p = init_params(arch, seed);
  std::mt19937_64 rng(seed * 7919 + 1);
  std::normal_distribution<double> bias(0.0, 0.1);
  auto arrays = p.arrays();
  const auto names = p.named_arrays();
  for (std::size_t a = 0; a < arrays.size(); ++a) {
    for (double& v : arrays[a]) v = names[a].is_bias ? bias(rng) : v * scale;
  }
  return p;
}

/// Relabels pairs: new pair k is old pair perm[k].
inline Scenario permute_scenario(const Scenario& s, const std::vector<std::size_t>& perm) {
  Scenario out = s;
  const std::size_t n = s.n_pairs;
  for (std::size_t k = 0; k < n; ++k) {
    out.tx_positions[k] = s.tx_positions[perm[k]];
    out.rx_positions[k] = s.rx_positions[perm[k]];
    out.weights[k] = s.weights[perm[k]];
    out.noise_powers[k] = s.noise_powers[perm[k]];
    for (std::size_t m = 0; m < n; ++m) {
      const auto src = s.channel(perm[k], perm[m]);
      auto dst = out.channel(k, m);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

}  // namespace lrgnn::testing
