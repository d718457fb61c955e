#include "lrgnn/objective.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace lrgnn {
namespace {

std::complex<double> inner(std::span<const std::complex<double>> h,
                           std::span<const std::complex<double>> q) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) acc += std::conj(h[k]) * q[k];
  return acc;
}

void check_inputs(const Scenario& s, const BeamformingMatrix& q) {
  if (q.n_users != s.n_pairs || q.n_tx != s.n_tx) {
    throw std::invalid_argument("beamformer dimensions do not match the scenario");
  }
  for (double v : s.noise_powers) {
    if (!(v > 0.0)) throw std::invalid_argument("noise power must be positive");
  }
}

// Interfering transmitters per receiver.
std::vector<std::vector<std::size_t>> interferers(const Scenario& s, std::span<const Edge> edges,
                                                  const ObjectiveOptions& opts) {
  std::vector<std::vector<std::size_t>> out(s.n_pairs);
  if (opts.full_interference) {
    for (std::size_t n = 0; n < s.n_pairs; ++n) {
      for (std::size_t i = 0; i < s.n_pairs; ++i) {
        if (i != n) out[n].push_back(i);
      }
    }
    return out;
  }
  for (const auto& e : edges) {
    if (e.src >= s.n_pairs || e.dst >= s.n_pairs) throw std::invalid_argument("edge out of range");
    out[e.dst].push_back(e.src);
  }
  return out;
}

}  // namespace

RateReport rate_report(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                       const ObjectiveOptions& opts) {
  check_inputs(s, q);
  const auto sources = interferers(s, edges, opts);
  RateReport r;
  r.sinr.resize(s.n_pairs);
  r.rate.resize(s.n_pairs);
  r.interference.resize(s.n_pairs);
  for (std::size_t n = 0; n < s.n_pairs; ++n) {
    const double signal = std::norm(inner(s.channel(n, n), q.row(n)));
    double interference = 0.0;
    for (std::size_t i : sources[n]) interference += std::norm(inner(s.channel(i, n), q.row(i)));
    const double denom = std::max(interference + s.noise_powers[n], kSinrDenominatorFloor);
    r.interference[n] = interference;
    r.sinr[n] = signal / denom;
    r.rate[n] = std::log1p(r.sinr[n]) / std::numbers::ln2;
    r.weighted_sum_rate += s.weights[n] * r.rate[n];
  }
  return r;
}

std::vector<double> sinr(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                         const ObjectiveOptions& opts) {
  return rate_report(s, edges, q, opts).sinr;
}

double weighted_sum_rate(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                         const ObjectiveOptions& opts) {
  return rate_report(s, edges, q, opts).weighted_sum_rate;
}

double weighted_sum_rate_gradient(const Scenario& s, std::span<const Edge> edges,
                                  const BeamformingMatrix& q, double scale,
                                  std::span<std::complex<double>> dq, const ObjectiveOptions& opts) {
  check_inputs(s, q);
  if (dq.size() != q.q.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  const auto sources = interferers(s, edges, opts);
  const std::size_t nt = s.n_tx;
  double total = 0.0;
  std::vector<std::complex<double>> cross;
  for (std::size_t n = 0; n < s.n_pairs; ++n) {
    const auto h_nn = s.channel(n, n);
    const std::complex<double> a_nn = inner(h_nn, q.row(n));
    const double signal = std::norm(a_nn);
    cross.clear();
    double interference = 0.0;
    for (std::size_t i : sources[n]) {
      cross.push_back(inner(s.channel(i, n), q.row(i)));
      interference += std::norm(cross.back());
    }
    const double raw = interference + s.noise_powers[n];
    const bool floored = raw < kSinrDenominatorFloor;
    const double denom = floored ? kSinrDenominatorFloor : raw;
    const double sinr_n = signal / denom;
    total += s.weights[n] * std::log1p(sinr_n) / std::numbers::ln2;

    // d rate_n / d sinr_n, times the caller's scale.
    const double coef = scale * s.weights[n] / ((1.0 + sinr_n) * std::numbers::ln2);
    if (coef == 0.0) continue;
    const double d_signal = coef / denom;
    for (std::size_t k = 0; k < nt; ++k) dq[n * nt + k] += d_signal * 2.0 * a_nn * h_nn[k];
    if (floored) continue;
    const double d_interf = -coef * signal / (denom * denom);
    for (std::size_t j = 0; j < sources[n].size(); ++j) {
      const std::size_t i = sources[n][j];
      const auto h_in = s.channel(i, n);
      for (std::size_t k = 0; k < nt; ++k) dq[i * nt + k] += d_interf * 2.0 * cross[j] * h_in[k];
    }
  }
  return total;
}

double loss(std::span<const Sample> batch, std::span<const BeamformingMatrix> beams,
            const ObjectiveOptions& opts) {
  if (batch.empty()) throw std::invalid_argument("loss of an empty batch");
  if (batch.size() != beams.size()) throw std::invalid_argument("batch and beamformer counts differ");
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    sum += weighted_sum_rate(batch[b].scenario, batch[b].graph.edges, beams[b], opts);
  }
  return -sum / static_cast<double>(batch.size());
}

BaselineKind parse_baseline(const std::string& text) {
  if (text == "mrt") return BaselineKind::mrt;
  if (text == "random") return BaselineKind::random;
  if (text == "zero") return BaselineKind::zero;
  throw std::invalid_argument("unknown baseline '" + text + "' (expected mrt, random or zero)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::mrt: return "mrt";
    case BaselineKind::random: return "random";
    case BaselineKind::zero: return "zero";
  }
  return "?";
}

BeamformingMatrix baseline_beamformers(const Scenario& s, BaselineKind kind, double p_max,
                                       std::uint64_t seed) {
  BeamformingMatrix q(s.n_pairs, s.n_tx);
  if (kind == BaselineKind::zero) return q;
  const double radius = std::sqrt(p_max);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t n = 0; n < s.n_pairs; ++n) {
    auto row = q.row(n);
    if (kind == BaselineKind::mrt) {
      const auto h = s.channel(n, n);
      std::copy(h.begin(), h.end(), row.begin());
    } else {
      for (auto& v : row) v = {normal(rng), normal(rng)};
    }
    double norm2 = 0.0;
    for (const auto& v : row) norm2 += std::norm(v);
    if (norm2 == 0.0) continue;
    const double f = radius / std::sqrt(norm2);
    for (auto& v : row) v *= f;
  }
  return q;
}

}  // namespace lrgnn
