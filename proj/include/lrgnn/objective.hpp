#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrgnn/mpgnn.hpp"
#include "lrgnn/scenario.hpp"

namespace lrgnn {

struct ObjectiveOptions {
  // Sum interference over every other transmitter instead of the graph edges.
  bool full_interference = false;
};

/// Denominators below this are clamped.
inline constexpr double kSinrDenominatorFloor = 1e-30;

struct RateReport {
  std::vector<double> sinr;
  std::vector<double> rate;          // log2(1 + sinr), bits
  std::vector<double> interference;  // received interference power
  double weighted_sum_rate = 0.0;
};

/// SINR_n = |h_nn^H q_n|^2 / (sum_{(i,n) in edges} |h_in^H q_i|^2 + sigma_n^2).
/// Throws std::invalid_argument on dimension mismatch or non-positive noise.
RateReport rate_report(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                       const ObjectiveOptions& opts = {});

std::vector<double> sinr(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                         const ObjectiveOptions& opts = {});

double weighted_sum_rate(const Scenario& s, std::span<const Edge> edges, const BeamformingMatrix& q,
                         const ObjectiveOptions& opts = {});

inline double weighted_sum_rate(const Sample& sample, const BeamformingMatrix& q,
                                const ObjectiveOptions& opts = {}) {
  return weighted_sum_rate(sample.scenario, sample.graph.edges, q, opts);
}

/// Returns the weighted sum rate and adds `scale` * d(rate)/dq to `dq`, using
/// the dL/dRe + i dL/dIm convention of mpgnn backward.
double weighted_sum_rate_gradient(const Scenario& s, std::span<const Edge> edges,
                                  const BeamformingMatrix& q, double scale,
                                  std::span<std::complex<double>> dq,
                                  const ObjectiveOptions& opts = {});

/// Negative mean weighted sum rate over the batch. Throws on an empty batch.
double loss(std::span<const Sample> batch, std::span<const BeamformingMatrix> beams,
            const ObjectiveOptions& opts = {});

enum class BaselineKind { mrt, random, zero };

BaselineKind parse_baseline(const std::string& text);
std::string to_string(BaselineKind kind);

/// mrt: sqrt(P_max) h_nn / ||h_nn||; random: uniform on the P_max sphere; zero: all zeros.
BeamformingMatrix baseline_beamformers(const Scenario& s, BaselineKind kind, double p_max,
                                       std::uint64_t seed = 0);

}  // namespace lrgnn
