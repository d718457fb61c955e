#pragma once

// Small neural-network core: dense and low-rank linear layers, MLPs with
// hand-written reverse-mode gradients, and parameter initialization.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lrgnn::nn {

enum class LayerKind { dense, low_rank };
enum class Activation { none, relu, sigmoid };
enum class InitScheme { uniform_fan, normal_fan };

/// strict: 1 <= rank <= min(d_in, d_out). overcomplete: rank >= 1 only, used
/// when counting parameters of hypothetical configurations.
enum class RankCheck { strict, overcomplete };

/// y = W x + b with W stored row-major as d_out x d_in.
struct DenseLinear {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  DenseLinear() = default;
  DenseLinear(std::size_t d_in, std::size_t d_out);
};

/// Row-vector convention: y = (x^T U) V + b, U is d_in x rank, V is rank x d_out
/// (both row-major). The equivalent dense weight is (U V)^T.
struct LowRankLinear {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t rank = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> bias;

  LowRankLinear() = default;
  LowRankLinear(std::size_t d_in, std::size_t d_out, std::size_t rank,
                RankCheck check = RankCheck::strict);
};

/// Named view of one parameter array, in canonical order.
struct NamedArray {
  std::string name;
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_bias = false;
};

class Linear {
 public:
  Linear() = default;
  explicit Linear(DenseLinear layer) : impl_(std::move(layer)) {}
  explicit Linear(LowRankLinear layer) : impl_(std::move(layer)) {}

  LayerKind kind() const {
    return std::holds_alternative<DenseLinear>(impl_) ? LayerKind::dense : LayerKind::low_rank;
  }
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  /// 0 for dense layers.
  std::size_t rank() const;

  const DenseLinear* as_dense() const { return std::get_if<DenseLinear>(&impl_); }
  const LowRankLinear* as_low_rank() const { return std::get_if<LowRankLinear>(&impl_); }
  DenseLinear* as_dense() { return std::get_if<DenseLinear>(&impl_); }
  LowRankLinear* as_low_rank() { return std::get_if<LowRankLinear>(&impl_); }

  /// Throws std::invalid_argument on shape mismatch.
  void forward(std::span<const double> x, std::span<double> y) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Accumulates dL/dparams into `grad` (same shape as *this) and writes
  /// dL/dx into `dx` unless it is empty.
  void backward(std::span<const double> x, std::span<const double> dy, Linear& grad,
                std::span<double> dx) const;

  std::size_t param_count(bool include_bias) const;

  /// Weights first (W, or U then V), bias last.
  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
  std::vector<NamedArray> named_arrays(const std::string& prefix) const;

  /// Dense d_out x d_in row-major weight equivalent to this layer.
  std::vector<double> effective_weight() const;

  Linear zeros_like() const;

  void init(std::mt19937_64& rng, InitScheme scheme = InitScheme::uniform_fan);

 private:
  std::variant<DenseLinear, LowRankLinear> impl_;
};

/// Per-layer intermediates of one MLP evaluation.
struct MlpCache {
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<double> output;               // activation of the last layer
};

/// Sequence of linear layers of a single kind with ReLU between them and an
/// optional output activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<Linear> layers, Activation output_activation);

  /// Builds zero-initialized layers chaining `dims`. `rank` is ignored for dense.
  static Mlp make(std::span<const std::size_t> dims, LayerKind kind, std::size_t rank,
                  Activation output_activation, RankCheck check = RankCheck::strict);

  const std::vector<Linear>& layers() const { return layers_; }
  std::vector<Linear>& layers() { return layers_; }
  Activation output_activation() const { return output_activation_; }
  LayerKind kind() const { return layers_.front().kind(); }
  std::vector<std::size_t> dims() const;
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

  std::vector<double> forward(std::span<const double> x) const;
  void forward(std::span<const double> x, MlpCache& cache) const;

  /// Backpropagates dy through the cached evaluation; accumulates into `grad`.
  void backward(const MlpCache& cache, std::span<const double> dy, Mlp& grad,
                std::span<double> dx) const;

  std::size_t param_count(bool include_bias) const;
  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
  std::vector<NamedArray> named_arrays(const std::string& prefix) const;
  Mlp zeros_like() const;
  void init(std::mt19937_64& rng, InitScheme scheme = InitScheme::uniform_fan);

 private:
  std::vector<Linear> layers_;
  Activation output_activation_ = Activation::none;
};

double sigmoid(double x);

}  // namespace lrgnn::nn
