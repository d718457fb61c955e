#include "lrgnn/mpgnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "binary_io.hpp"

namespace lrgnn {
namespace {

void check_compat(const Graph& graph, const MpgnnParams& params) {
  const std::size_t nt = graph.n_tx;
  if (params.mlp1.in_dim() != 6 * nt || params.mlp2.out_dim() != 2 * nt ||
      params.mlp2.in_dim() != 4 * nt + kMessageDim || params.mlp1.out_dim() != kMessageDim) {
    throw std::invalid_argument("graph antenna count (Nt=" + std::to_string(nt) +
                                ") does not match the model parameters");
  }
}

struct RoundRecord {
  std::vector<nn::MlpCache>* messages;
  std::vector<nn::MlpCache>* updates;
  std::vector<std::int64_t>* argmax;
};

// One message-passing round. When `record` is set every MLP evaluation is cached.
NodeStates run_round(const NodeStates& states, const Graph& graph, const MpgnnParams& params,
                     const RoundRecord* record) {
  const std::size_t nt = graph.n_tx;
  const std::size_t n = graph.n_vertices;
  const std::size_t state_dim = 4 * nt;
  if (states.dim != state_dim || states.n_vertices != n) {
    throw std::invalid_argument("node state dimensions do not match the graph");
  }

  const std::size_t n_edges = graph.edges.size();
  std::vector<nn::MlpCache> local_messages;
  auto& messages = record ? *record->messages : local_messages;
  messages.resize(n_edges);
  std::vector<double> input(6 * nt);
  for (std::size_t e = 0; e < n_edges; ++e) {
    const auto src = states.row(graph.edges[e].src);
    const auto feat = graph.edge_row(e);
    std::copy(src.begin(), src.end(), input.begin());
    std::copy(feat.begin(), feat.end(), input.begin() + static_cast<std::ptrdiff_t>(state_dim));
    params.mlp1.forward(input, messages[e]);
  }

  NodeStates next{n, state_dim, std::vector<double>(n * state_dim)};
  std::vector<nn::MlpCache> local_updates(record ? 0 : 1);
  if (record) {
    record->updates->resize(n);
    record->argmax->assign(n * kMessageDim, -1);
  }
  std::vector<double> update_in(state_dim + kMessageDim);
  for (std::size_t v = 0; v < n; ++v) {
    const auto x = states.row(v);
    std::copy(x.begin(), x.end(), update_in.begin());
    double* agg = update_in.data() + state_dim;
    std::fill(agg, agg + kMessageDim, 0.0);
    bool first = true;
    for (std::size_t e : graph.incoming[v]) {
      const auto& msg = messages[e].output;
      for (std::size_t c = 0; c < kMessageDim; ++c) {
        if (first || msg[c] > agg[c]) {
          agg[c] = msg[c];
          if (record) (*record->argmax)[v * kMessageDim + c] = static_cast<std::int64_t>(e);
        }
      }
      first = false;
    }
    auto& cache = record ? (*record->updates)[v] : local_updates[0];
    params.mlp2.forward(update_in, cache);

    auto out = next.row(v);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(2 * nt), out.begin());
    std::copy(cache.output.begin(), cache.output.end(),
              out.begin() + static_cast<std::ptrdiff_t>(2 * nt));
  }
  return next;
}

}  // namespace

MpgnnArch MpgnnArch::dense(std::size_t n_tx) {
  MpgnnArch a;
  a.n_tx = n_tx;
  return a;
}

MpgnnArch MpgnnArch::low_rank(std::size_t n_tx, std::size_t a1, std::size_t a2) {
  MpgnnArch a;
  a.n_tx = n_tx;
  a.kind = nn::LayerKind::low_rank;
  a.rank_mlp1 = a1;
  a.rank_mlp2 = a2;
  return a;
}

std::vector<std::size_t> MpgnnArch::mlp1_dims() const { return {6 * n_tx, kMessageDim, kMessageDim}; }

std::vector<std::size_t> MpgnnArch::mlp2_dims() const {
  return {kMessageDim + 4 * n_tx, kUpdateHiddenDim, 2 * n_tx};
}

void MpgnnArch::validate(nn::RankCheck check) const {
  if (n_tx == 0) throw std::invalid_argument("Nt must be >= 1");
  if (n_layers == 0) throw std::invalid_argument("n_layers must be >= 1");
  if (!(p_max > 0.0)) throw std::invalid_argument("p_max must be positive");
  if (!is_low_rank()) return;
  if (rank_mlp1 == 0 || rank_mlp2 == 0) throw std::invalid_argument("ranks must be >= 1");
  if (check == nn::RankCheck::overcomplete) return;
  const auto d1 = mlp1_dims();
  const auto d2 = mlp2_dims();
  const std::size_t max1 = std::min({d1[0], d1[1], d1[2]});
  const std::size_t max2 = std::min({d2[0], d2[1], d2[2]});
  if (rank_mlp1 > max1) {
    throw std::invalid_argument("a1=" + std::to_string(rank_mlp1) + " exceeds the MLP1 limit " +
                                std::to_string(max1));
  }
  if (rank_mlp2 > max2) {
    throw std::invalid_argument("a2=" + std::to_string(rank_mlp2) + " exceeds the MLP2 limit " +
                                std::to_string(max2) + " at Nt=" + std::to_string(n_tx));
  }
}

std::vector<std::span<double>> MpgnnParams::arrays() {
  auto out = mlp1.arrays();
  for (auto a : mlp2.arrays()) out.push_back(a);
  return out;
}

std::vector<std::span<const double>> MpgnnParams::arrays() const {
  auto out = mlp1.arrays();
  for (auto a : mlp2.arrays()) out.push_back(a);
  return out;
}

std::vector<nn::NamedArray> MpgnnParams::named_arrays() const {
  auto out = mlp1.named_arrays("mlp1");
  for (auto& a : mlp2.named_arrays("mlp2")) out.push_back(a);
  return out;
}

MpgnnParams MpgnnParams::zeros_like() const { return {mlp1.zeros_like(), mlp2.zeros_like()}; }

std::size_t MpgnnParams::param_count(bool include_bias) const {
  return mlp1.param_count(include_bias) + mlp2.param_count(include_bias);
}

MpgnnParams make_params(const MpgnnArch& arch, nn::RankCheck check) {
  arch.validate(check);
  const auto d1 = arch.mlp1_dims();
  const auto d2 = arch.mlp2_dims();
  return {nn::Mlp::make(d1, arch.kind, arch.rank_mlp1, nn::Activation::relu, check),
          nn::Mlp::make(d2, arch.kind, arch.rank_mlp2, nn::Activation::sigmoid, check)};
}

MpgnnParams init_params(const MpgnnArch& arch, std::uint64_t seed, nn::InitScheme scheme) {
  MpgnnParams p = make_params(arch);
  std::mt19937_64 rng(seed);
  p.mlp1.init(rng, scheme);
  p.mlp2.init(rng, scheme);
  return p;
}

void round_to_f32(MpgnnParams& params) {
  for (auto a : params.arrays()) {
    for (auto& v : a) v = detail::round_f32(v);
  }
}

ModelParamCounts count_model_params(const MpgnnArch& arch, bool include_bias) {
  arch.validate(nn::RankCheck::overcomplete);
  auto count = [&](const std::vector<std::size_t>& dims, std::size_t rank) {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      total += arch.is_low_rank() ? rank * (dims[l] + dims[l + 1]) : dims[l] * dims[l + 1];
      if (include_bias) total += dims[l + 1];
    }
    return total;
  };
  ModelParamCounts c;
  c.mlp1 = count(arch.mlp1_dims(), arch.rank_mlp1);
  c.mlp2 = count(arch.mlp2_dims(), arch.rank_mlp2);
  c.total = c.mlp1 + c.mlp2;
  return c;
}

NodeStates initial_states(const Graph& graph) {
  const std::size_t nt = graph.n_tx;
  NodeStates s{graph.n_vertices, 4 * nt, std::vector<double>(graph.n_vertices * 4 * nt, 0.0)};
  for (std::size_t v = 0; v < graph.n_vertices; ++v) {
    const auto z = graph.vertex_row(v);
    std::copy(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(2 * nt), s.row(v).begin());
  }
  return s;
}

NodeStates layer_step(const NodeStates& states, const Graph& graph, const MpgnnParams& params) {
  check_compat(graph, params);
  return run_round(states, graph, params, nullptr);
}

namespace {

BeamformingMatrix run_forward(const Graph& graph, const MpgnnParams& params,
                              const MpgnnArch& arch, std::vector<Tape::Round>* rounds, std::vector<double>* readout,
                              std::vector<double>* scales) {
  check_compat(graph, params);
  if (arch.n_tx != graph.n_tx) throw std::invalid_argument("architecture Nt does not match the graph");
  const std::size_t nt = graph.n_tx;
  const std::size_t n = graph.n_vertices;

  NodeStates states = initial_states(graph);
  if (rounds) rounds->resize(arch.n_layers);
  for (std::size_t k = 0; k < arch.n_layers; ++k) {
    if (rounds) {
      auto& r = (*rounds)[k];
      RoundRecord rec{&r.messages, &r.updates, &r.argmax};
      states = run_round(states, graph, params, &rec);
    } else {
      states = run_round(states, graph, params, nullptr);
    }
  }

  BeamformingMatrix q(n, nt);
  if (readout) readout->assign(n * 2 * nt, 0.0);
  if (scales) scales->assign(n, 1.0);
  const double radius = std::sqrt(arch.p_max);
  std::vector<double> v(2 * nt);
  for (std::size_t u = 0; u < n; ++u) {
    const auto row = states.row(u);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < 2 * nt; ++c) {
      v[c] = 2.0 * row[2 * nt + c] - 1.0;
      norm2 += v[c] * v[c];
    }
    const double norm = std::sqrt(norm2);
    const double scale = norm > radius ? radius / norm : 1.0;
    auto out = q.row(u);
    for (std::size_t k = 0; k < nt; ++k) out[k] = {scale * v[k], scale * v[nt + k]};
    if (readout) std::copy(v.begin(), v.end(), readout->begin() + static_cast<std::ptrdiff_t>(u * 2 * nt));
    if (scales) (*scales)[u] = scale;
  }
  return q;
}

}  // namespace

BeamformingMatrix forward(const Graph& graph, const MpgnnParams& params, const MpgnnArch& arch) {
  return run_forward(graph, params, arch, nullptr, nullptr, nullptr);
}

BeamformingMatrix forward(const Graph& graph, const MpgnnParams& params, const MpgnnArch& arch,
                          Tape& tape) {
  tape = Tape{};
  auto q = run_forward(graph, params, arch, &tape.rounds_, &tape.readout_, &tape.scale_);
  tape.graph_ = &graph;
  tape.n_tx_ = graph.n_tx;
  tape.p_max_ = arch.p_max;
  tape.recorded_ = true;
  return q;
}

void backward(const Tape& tape, const MpgnnParams& params, std::span<const std::complex<double>> dq,
              MpgnnParams& grads) {
  if (!tape.recorded_) throw std::logic_error("backward called before a recorded forward pass");
  const Graph& graph = *tape.graph_;
  const std::size_t nt = tape.n_tx_;
  const std::size_t n = graph.n_vertices;
  const std::size_t state_dim = 4 * nt;
  if (dq.size() != n * nt) throw std::invalid_argument("backward: dq has the wrong size");

  // Readout and projection.
  std::vector<double> dhidden(n * 2 * nt, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const double* v = tape.readout_.data() + u * 2 * nt;
    const double scale = tape.scale_[u];
    std::vector<double> g(2 * nt);
    for (std::size_t k = 0; k < nt; ++k) {
      g[k] = dq[u * nt + k].real();
      g[nt + k] = dq[u * nt + k].imag();
    }
    if (scale < 1.0) {
      double norm2 = 0.0, dot = 0.0;
      for (std::size_t c = 0; c < 2 * nt; ++c) {
        norm2 += v[c] * v[c];
        dot += v[c] * g[c];
      }
      for (std::size_t c = 0; c < 2 * nt; ++c) g[c] = scale * (g[c] - dot / norm2 * v[c]);
    }
    for (std::size_t c = 0; c < 2 * nt; ++c) dhidden[u * 2 * nt + c] = 2.0 * g[c];
  }

  std::vector<double> dstate(n * state_dim);
  std::vector<double> dupdate(state_dim + kMessageDim);
  std::vector<double> dmessage_in(6 * nt);
  std::vector<double> dmessages;
  for (std::size_t k = tape.rounds_.size(); k-- > 0;) {
    const auto& round = tape.rounds_[k];
    std::fill(dstate.begin(), dstate.end(), 0.0);
    dmessages.assign(graph.edges.size() * kMessageDim, 0.0);

    for (std::size_t u = 0; u < n; ++u) {
      std::span<const double> dy(dhidden.data() + u * 2 * nt, 2 * nt);
      params.mlp2.backward(round.updates[u], dy, grads.mlp2, dupdate);
      for (std::size_t c = 0; c < state_dim; ++c) dstate[u * state_dim + c] += dupdate[c];
      for (std::size_t c = 0; c < kMessageDim; ++c) {
        const std::int64_t e = round.argmax[u * kMessageDim + c];
        if (e >= 0) dmessages[static_cast<std::size_t>(e) * kMessageDim + c] += dupdate[state_dim + c];
      }
    }

    // Round 0 reads constant inputs; only parameter gradients are needed there.
    const bool need_input_grad = k > 0;
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      std::span<const double> dm(dmessages.data() + e * kMessageDim, kMessageDim);
      if (std::all_of(dm.begin(), dm.end(), [](double x) { return x == 0.0; })) continue;
      params.mlp1.backward(round.messages[e], dm, grads.mlp1,
                           need_input_grad ? std::span<double>(dmessage_in) : std::span<double>());
      if (need_input_grad) {
        const std::size_t src = graph.edges[e].src;
        for (std::size_t c = 0; c < state_dim; ++c) dstate[src * state_dim + c] += dmessage_in[c];
      }
    }

    if (k == 0) break;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t c = 0; c < 2 * nt; ++c) {
        dhidden[u * 2 * nt + c] = dstate[u * state_dim + 2 * nt + c];
      }
    }
  }
}

}  // namespace lrgnn
