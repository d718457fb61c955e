#include "lrgnn/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrgnn::nn {

void Adam::step(std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params/grads count mismatch");
  for (std::size_t a = 0; a < params.size(); ++a) {
    if (params[a].size() != grads[a].size()) {
      throw std::invalid_argument("adam: shape mismatch in array " + std::to_string(a));
    }
    for (std::size_t i = 0; i < grads[a].size(); ++i) {
      if (!std::isfinite(grads[a][i])) {
        throw std::runtime_error("adam: non-finite gradient " + std::to_string(grads[a][i]) +
                                 " in array " + std::to_string(a) + " element " +
                                 std::to_string(i) + " at step " + std::to_string(t_ + 1));
      }
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw std::invalid_argument("adam: parameter layout changed between steps");
  }

  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t a = 0; a < params.size(); ++a) {
    auto& m = m_[a];
    auto& v = v_[a];
    if (m.size() != params[a].size()) {
      throw std::invalid_argument("adam: parameter layout changed between steps");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = grads[a][i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      params[a][i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace lrgnn::nn
