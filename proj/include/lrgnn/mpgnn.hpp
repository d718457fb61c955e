#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lrgnn/nn.hpp"
#include "lrgnn/scenario.hpp"

namespace lrgnn {

inline constexpr std::size_t kMessageDim = 64;
inline constexpr std::size_t kUpdateHiddenDim = 512;

/// Message-passing GNN shape. MLP1 maps [x_j ; e_jn] (6 Nt) -> 64 -> 64 with ReLU
/// throughout; MLP2 maps [x_n ; agg_n] (64 + 4 Nt) -> 512 -> 2 Nt, ReLU hidden.
/// The update's sigmoid is stored as MLP2's output activation.
struct MpgnnArch {
  std::size_t n_tx = 0;
  std::size_t n_layers = 3;
  nn::LayerKind kind = nn::LayerKind::dense;
  std::size_t rank_mlp1 = 0;  // a1, low-rank only
  std::size_t rank_mlp2 = 0;  // a2, low-rank only
  double p_max = 1.0;

  static MpgnnArch dense(std::size_t n_tx);
  static MpgnnArch low_rank(std::size_t n_tx, std::size_t a1, std::size_t a2);

  std::vector<std::size_t> mlp1_dims() const;
  std::vector<std::size_t> mlp2_dims() const;
  std::size_t state_dim() const { return 4 * n_tx; }

  /// Throws std::invalid_argument; with `check` overcomplete, ranks only need to be >= 1.
  void validate(nn::RankCheck check = nn::RankCheck::strict) const;
  bool is_low_rank() const { return kind == nn::LayerKind::low_rank; }
};

/// MLP1 and MLP2, shared by every message-passing round.
struct MpgnnParams {
  nn::Mlp mlp1;
  nn::Mlp mlp2;

  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
  std::vector<nn::NamedArray> named_arrays() const;
  MpgnnParams zeros_like() const;
  std::size_t param_count(bool include_bias) const;
};

/// Zero-filled parameters for `arch`.
MpgnnParams make_params(const MpgnnArch& arch, nn::RankCheck check = nn::RankCheck::strict);

/// Fan-based zero-mean init, deterministic in `seed`; MLP1 is drawn before MLP2.
MpgnnParams init_params(const MpgnnArch& arch, std::uint64_t seed,
                        nn::InitScheme scheme = nn::InitScheme::uniform_fan);

/// Rounds every parameter to float precision (the model-file representation).
void round_to_f32(MpgnnParams& params);

struct ModelParamCounts {
  std::size_t mlp1 = 0;
  std::size_t mlp2 = 0;
  std::size_t total = 0;
};

/// Counts one MLP1 + MLP2 pair; independent of n_layers. Accepts overcomplete ranks.
ModelParamCounts count_model_params(const MpgnnArch& arch, bool include_bias);

/// Per-vertex state rows [fixed channel features (2 Nt) | hidden (2 Nt)].
struct NodeStates {
  std::size_t n_vertices = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t n) const { return {data.data() + n * dim, dim}; }
  std::span<double> row(std::size_t n) { return {data.data() + n * dim, dim}; }
};

/// Row n is the beamformer q_n in C^Nt.
struct BeamformingMatrix {
  std::size_t n_users = 0;
  std::size_t n_tx = 0;
  std::vector<std::complex<double>> q;

  BeamformingMatrix() = default;
  BeamformingMatrix(std::size_t users, std::size_t tx) : n_users(users), n_tx(tx), q(users * tx) {}

  std::span<const std::complex<double>> row(std::size_t n) const { return {q.data() + n * n_tx, n_tx}; }
  std::span<std::complex<double>> row(std::size_t n) { return {q.data() + n * n_tx, n_tx}; }
};

/// Initial states: channel features from the graph, hidden part zero.
NodeStates initial_states(const Graph& graph);

/// One round: messages MLP1([x_j ; e_jn]) over incoming edges, elementwise max
/// (zero vector when there are none), y_n = MLP2([x_n ; agg_n]), hidden = sigmoid(y_n).
NodeStates layer_step(const NodeStates& states, const Graph& graph, const MpgnnParams& params);

/// Record of a forward pass sufficient for exact reverse-mode gradients.
class Tape {
 public:
  struct Round {
    std::vector<nn::MlpCache> messages;  // per edge
    std::vector<nn::MlpCache> updates;   // per vertex
    // argmax[n * kMessageDim + c]: edge index supplying coordinate c of agg_n, or -1.
    std::vector<std::int64_t> argmax;
  };

  bool recorded() const { return recorded_; }

 private:
  friend BeamformingMatrix forward(const Graph&, const MpgnnParams&, const MpgnnArch&, Tape&);
  friend void backward(const Tape&, const MpgnnParams&, std::span<const std::complex<double>>,
                       MpgnnParams&);

  const Graph* graph_ = nullptr;
  std::size_t n_tx_ = 0;
  double p_max_ = 1.0;
  std::vector<Round> rounds_;
  std::vector<double> readout_;  // v = 2 hidden - 1, N x 2Nt
  std::vector<double> scale_;    // projection factor per vertex
  bool recorded_ = false;
};

/// Runs n_layers rounds with shared parameters and projects each v_n onto the
/// P_max ball: q_n = v_n min(1, sqrt(P_max) / ||v_n||). The graph must outlive
/// the tape.
BeamformingMatrix forward(const Graph& graph, const MpgnnParams& params, const MpgnnArch& arch);
BeamformingMatrix forward(const Graph& graph, const MpgnnParams& params, const MpgnnArch& arch,
                          Tape& tape);

/// Accumulates dL/dparams into `grads`. `dq` holds dL/dRe(q) + i dL/dIm(q)
/// per beamformer entry. Throws std::logic_error if the tape is empty.
void backward(const Tape& tape, const MpgnnParams& params, std::span<const std::complex<double>> dq,
              MpgnnParams& grads);

}  // namespace lrgnn
