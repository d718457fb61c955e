#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lrgnn::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are sized on the first
/// step and must keep the same layout afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Throws std::runtime_error (naming array and element) on a non-finite
  /// gradient, before any parameter is touched.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace lrgnn::nn
