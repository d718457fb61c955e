#include "lrgnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrgnn::nn {
namespace {

void check_dims(std::size_t d_in, std::size_t d_out) {
  if (d_in == 0 || d_out == 0) throw std::invalid_argument("layer dimensions must be positive");
}

void fill_init(std::span<double> values, std::size_t fan_in, std::size_t fan_out,
               std::mt19937_64& rng, InitScheme scheme) {
  const double fan = static_cast<double>(fan_in + fan_out);
  if (scheme == InitScheme::uniform_fan) {
    const double bound = std::sqrt(6.0 / fan);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : values) v = dist(rng);
  } else {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan));
    for (auto& v : values) v = dist(rng);
  }
}

void dense_forward(const DenseLinear& l, std::span<const double> x, std::span<double> y) {
  for (std::size_t o = 0; o < l.d_out; ++o) {
    const double* w = l.weight.data() + o * l.d_in;
    double acc = l.bias[o];
    for (std::size_t i = 0; i < l.d_in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

void low_rank_project(const LowRankLinear& l, std::span<const double> x, std::span<double> z) {
  std::fill(z.begin(), z.end(), 0.0);
  for (std::size_t i = 0; i < l.d_in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* u = l.u.data() + i * l.rank;
    for (std::size_t k = 0; k < l.rank; ++k) z[k] += xi * u[k];
  }
}

void low_rank_forward(const LowRankLinear& l, std::span<const double> x, std::span<double> y) {
  std::vector<double> z(l.rank);
  low_rank_project(l, x, z);
  std::copy(l.bias.begin(), l.bias.end(), y.begin());
  for (std::size_t k = 0; k < l.rank; ++k) {
    const double zk = z[k];
    const double* v = l.v.data() + k * l.d_out;
    for (std::size_t o = 0; o < l.d_out; ++o) y[o] += zk * v[o];
  }
}

void dense_backward(const DenseLinear& l, std::span<const double> x, std::span<const double> dy,
                    DenseLinear& g, std::span<double> dx) {
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t o = 0; o < l.d_out; ++o) {
    const double d = dy[o];
    if (d == 0.0) continue;
    g.bias[o] += d;
    const double* w = l.weight.data() + o * l.d_in;
    double* gw = g.weight.data() + o * l.d_in;
    for (std::size_t i = 0; i < l.d_in; ++i) gw[i] += d * x[i];
    if (!dx.empty()) {
      for (std::size_t i = 0; i < l.d_in; ++i) dx[i] += w[i] * d;
    }
  }
}

void low_rank_backward(const LowRankLinear& l, std::span<const double> x,
                       std::span<const double> dy, LowRankLinear& g, std::span<double> dx) {
  std::vector<double> z(l.rank);
  std::vector<double> dz(l.rank, 0.0);
  low_rank_project(l, x, z);
  for (std::size_t o = 0; o < l.d_out; ++o) g.bias[o] += dy[o];
  for (std::size_t k = 0; k < l.rank; ++k) {
    const double* v = l.v.data() + k * l.d_out;
    double* gv = g.v.data() + k * l.d_out;
    const double zk = z[k];
    double acc = 0.0;
    for (std::size_t o = 0; o < l.d_out; ++o) {
      gv[o] += zk * dy[o];
      acc += v[o] * dy[o];
    }
    dz[k] = acc;
  }
  for (std::size_t i = 0; i < l.d_in; ++i) {
    const double* u = l.u.data() + i * l.rank;
    double* gu = g.u.data() + i * l.rank;
    const double xi = x[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < l.rank; ++k) {
      gu[k] += xi * dz[k];
      acc += u[k] * dz[k];
    }
    if (!dx.empty()) dx[i] = acc;
  }
}

}  // namespace

DenseLinear::DenseLinear(std::size_t d_in_, std::size_t d_out_)
    : d_in(d_in_), d_out(d_out_), weight(d_in_ * d_out_, 0.0), bias(d_out_, 0.0) {
  check_dims(d_in, d_out);
}

LowRankLinear::LowRankLinear(std::size_t d_in_, std::size_t d_out_, std::size_t rank_,
                             RankCheck check)
    : d_in(d_in_), d_out(d_out_), rank(rank_) {
  check_dims(d_in, d_out);
  if (rank == 0) throw std::invalid_argument("low-rank layer rank must be >= 1");
  if (check == RankCheck::strict && rank > std::min(d_in, d_out)) {
    throw std::invalid_argument("low-rank layer rank " + std::to_string(rank) +
                                " exceeds min(d_in, d_out) = " +
                                std::to_string(std::min(d_in, d_out)));
  }
  u.assign(d_in * rank, 0.0);
  v.assign(rank * d_out, 0.0);
  bias.assign(d_out, 0.0);
}

std::size_t Linear::in_dim() const {
  return std::visit([](const auto& l) { return l.d_in; }, impl_);
}

std::size_t Linear::out_dim() const {
  return std::visit([](const auto& l) { return l.d_out; }, impl_);
}

std::size_t Linear::rank() const {
  const auto* lr = as_low_rank();
  return lr ? lr->rank : 0;
}

void Linear::forward(std::span<const double> x, std::span<double> y) const {
  if (x.size() != in_dim() || y.size() != out_dim()) {
    throw std::invalid_argument("linear forward: expected input " + std::to_string(in_dim()) +
                                " / output " + std::to_string(out_dim()) + ", got " +
                                std::to_string(x.size()) + " / " + std::to_string(y.size()));
  }
  if (const auto* d = as_dense()) {
    dense_forward(*d, x, y);
  } else {
    low_rank_forward(*as_low_rank(), x, y);
  }
}

std::vector<double> Linear::forward(std::span<const double> x) const {
  std::vector<double> y(out_dim());
  forward(x, y);
  return y;
}

void Linear::backward(std::span<const double> x, std::span<const double> dy, Linear& grad,
                      std::span<double> dx) const {
  if (x.size() != in_dim() || dy.size() != out_dim() || (!dx.empty() && dx.size() != in_dim())) {
    throw std::invalid_argument("linear backward: shape mismatch");
  }
  if (const auto* d = as_dense()) {
    auto* g = grad.as_dense();
    if (g == nullptr || g->weight.size() != d->weight.size()) {
      throw std::invalid_argument("linear backward: gradient layout mismatch");
    }
    dense_backward(*d, x, dy, *g, dx);
  } else {
    const auto& l = *as_low_rank();
    auto* g = grad.as_low_rank();
    if (g == nullptr || g->rank != l.rank || g->d_in != l.d_in || g->d_out != l.d_out) {
      throw std::invalid_argument("linear backward: gradient layout mismatch");
    }
    low_rank_backward(l, x, dy, *g, dx);
  }
}

std::size_t Linear::param_count(bool include_bias) const {
  const std::size_t bias = include_bias ? out_dim() : 0;
  if (const auto* d = as_dense()) return d->d_out * d->d_in + bias;
  const auto& l = *as_low_rank();
  return l.rank * (l.d_in + l.d_out) + bias;
}

std::vector<std::span<double>> Linear::arrays() {
  if (auto* d = as_dense()) return {d->weight, d->bias};
  auto& l = *as_low_rank();
  return {l.u, l.v, l.bias};
}

std::vector<std::span<const double>> Linear::arrays() const {
  if (const auto* d = as_dense()) return {d->weight, d->bias};
  const auto& l = *as_low_rank();
  return {l.u, l.v, l.bias};
}

std::vector<NamedArray> Linear::named_arrays(const std::string& prefix) const {
  if (const auto* d = as_dense()) {
    return {{prefix + ".W", d->weight, d->d_out, d->d_in, false},
            {prefix + ".b", d->bias, d->d_out, 1, true}};
  }
  const auto& l = *as_low_rank();
  return {{prefix + ".U", l.u, l.d_in, l.rank, false},
          {prefix + ".V", l.v, l.rank, l.d_out, false},
          {prefix + ".b", l.bias, l.d_out, 1, true}};
}

std::vector<double> Linear::effective_weight() const {
  if (const auto* d = as_dense()) return d->weight;
  const auto& l = *as_low_rank();
  std::vector<double> w(l.d_out * l.d_in, 0.0);
  for (std::size_t o = 0; o < l.d_out; ++o) {
    for (std::size_t i = 0; i < l.d_in; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < l.rank; ++k) acc += l.u[i * l.rank + k] * l.v[k * l.d_out + o];
      w[o * l.d_in + i] = acc;
    }
  }
  return w;
}

Linear Linear::zeros_like() const {
  if (const auto* d = as_dense()) return Linear(DenseLinear(d->d_in, d->d_out));
  const auto& l = *as_low_rank();
  return Linear(LowRankLinear(l.d_in, l.d_out, l.rank, RankCheck::overcomplete));
}

void Linear::init(std::mt19937_64& rng, InitScheme scheme) {
  if (auto* d = as_dense()) {
    fill_init(d->weight, d->d_in, d->d_out, rng, scheme);
    std::fill(d->bias.begin(), d->bias.end(), 0.0);
    return;
  }
  auto& l = *as_low_rank();
  fill_init(l.u, l.d_in, l.rank, rng, scheme);
  fill_init(l.v, l.rank, l.d_out, rng, scheme);
  std::fill(l.bias.begin(), l.bias.end(), 0.0);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mlp::Mlp(std::vector<Linear> layers, Activation output_activation)
    : layers_(std::move(layers)), output_activation_(output_activation) {
  if (layers_.empty()) throw std::invalid_argument("an MLP needs at least one layer");
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].in_dim() != layers_[l - 1].out_dim()) {
      throw std::invalid_argument("MLP layer dimensions do not chain");
    }
    if (layers_[l].kind() != layers_[0].kind()) {
      throw std::invalid_argument("MLP layers must all be dense or all low-rank");
    }
  }
}

Mlp Mlp::make(std::span<const std::size_t> dims, LayerKind kind, std::size_t rank,
              Activation output_activation, RankCheck check) {
  if (dims.size() < 2) throw std::invalid_argument("MLP needs at least two dims");
  std::vector<Linear> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (kind == LayerKind::dense) {
      layers.emplace_back(DenseLinear(dims[l], dims[l + 1]));
    } else {
      layers.emplace_back(LowRankLinear(dims[l], dims[l + 1], rank, check));
    }
  }
  return Mlp(std::move(layers), output_activation);
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> d{layers_.front().in_dim()};
  for (const auto& l : layers_) d.push_back(l.out_dim());
  return d;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  MlpCache cache;
  forward(x, cache);
  return std::move(cache.output);
}

void Mlp::forward(std::span<const double> x, MlpCache& cache) const {
  const std::size_t n = layers_.size();
  cache.inputs.resize(n);
  cache.inputs[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < n; ++l) {
    auto& out = l + 1 < n ? cache.inputs[l + 1] : cache.output;
    out.resize(layers_[l].out_dim());
    layers_[l].forward(cache.inputs[l], out);
    const Activation act = l + 1 < n ? Activation::relu : output_activation_;
    if (act == Activation::relu) {
      for (auto& v : out) v = v > 0.0 ? v : 0.0;
    } else if (act == Activation::sigmoid) {
      for (auto& v : out) v = sigmoid(v);
    }
  }
}

void Mlp::backward(const MlpCache& cache, std::span<const double> dy, Mlp& grad,
                   std::span<double> dx) const {
  const std::size_t n = layers_.size();
  if (grad.layers_.size() != n) throw std::invalid_argument("MLP backward: gradient layout mismatch");
  if (cache.inputs.size() != n) throw std::logic_error("MLP backward called without a forward pass");
  std::vector<double> delta(dy.begin(), dy.end());
  std::vector<double> next;
  for (std::size_t l = n; l-- > 0;) {
    const auto& out = l + 1 < n ? cache.inputs[l + 1] : cache.output;
    const Activation act = l + 1 < n ? Activation::relu : output_activation_;
    if (act == Activation::relu) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(out[i] > 0.0)) delta[i] = 0.0;
      }
    } else if (act == Activation::sigmoid) {
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= out[i] * (1.0 - out[i]);
    }
    if (l == 0) {
      layers_[0].backward(cache.inputs[0], delta, grad.layers_[0], dx);
    } else {
      next.assign(layers_[l].in_dim(), 0.0);
      layers_[l].backward(cache.inputs[l], delta, grad.layers_[l], next);
      delta.swap(next);
    }
  }
}

std::size_t Mlp::param_count(bool include_bias) const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.param_count(include_bias);
  return total;
}

std::vector<std::span<double>> Mlp::arrays() {
  std::vector<std::span<double>> out;
  for (auto& l : layers_) {
    for (auto a : l.arrays()) out.push_back(a);
  }
  return out;
}

std::vector<std::span<const double>> Mlp::arrays() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers_) {
    for (auto a : l.arrays()) out.push_back(a);
  }
  return out;
}

std::vector<NamedArray> Mlp::named_arrays(const std::string& prefix) const {
  std::vector<NamedArray> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (auto& a : layers_[l].named_arrays(prefix + "." + std::to_string(l))) out.push_back(a);
  }
  return out;
}

Mlp Mlp::zeros_like() const {
  std::vector<Linear> layers;
  layers.reserve(layers_.size());
  for (const auto& l : layers_) layers.push_back(l.zeros_like());
  return Mlp(std::move(layers), output_activation_);
}

void Mlp::init(std::mt19937_64& rng, InitScheme scheme) {
  for (auto& l : layers_) l.init(rng, scheme);
}

}  // namespace lrgnn::nn
