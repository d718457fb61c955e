#include "lrgnn/dataset.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace lrgnn {
namespace {

constexpr std::string_view kMagic = "LRGD";

using Kind = DatasetError::Kind;

[[noreturn]] void truncated(const std::filesystem::path& path) {
  throw DatasetError(Kind::truncated, "dataset '" + path.string() + "' is truncated");
}

}  // namespace

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  if (samples.empty()) throw DatasetError(Kind::invalid, "refusing to write an empty dataset");
  const std::size_t n = samples.front().scenario.n_pairs;
  const std::size_t nt = samples.front().scenario.n_tx;
  for (const auto& s : samples) {
    if (s.scenario.n_pairs != n || s.scenario.n_tx != nt) {
      throw DatasetError(Kind::invalid, "all samples in a dataset must share N and Nt");
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(Kind::io, "cannot open '" + path.string() + "' for writing");

  detail::put_tag(out, kMagic);
  detail::put_u32(out, kDatasetVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(samples.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(n));
  detail::put_u32(out, static_cast<std::uint32_t>(nt));

  for (const auto& sample : samples) {
    const Scenario& s = sample.scenario;
    for (const auto& p : s.tx_positions) {
      detail::put_f32(out, p.x);
      detail::put_f32(out, p.y);
    }
    for (const auto& p : s.rx_positions) {
      detail::put_f32(out, p.x);
      detail::put_f32(out, p.y);
    }
    for (const auto& h : s.channels) {
      detail::put_f32(out, h.real());
      detail::put_f32(out, h.imag());
    }
    for (double w : s.weights) detail::put_f32(out, w);
    for (double v : s.noise_powers) detail::put_f32(out, v);
    detail::put_u32(out, static_cast<std::uint32_t>(sample.graph.edges.size()));
    for (const auto& e : sample.graph.edges) {
      detail::put_u32(out, e.src);
      detail::put_u32(out, e.dst);
    }
  }
  if (!out) throw DatasetError(Kind::io, "write to '" + path.string() + "' failed");
}

std::vector<Sample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(Kind::io, "cannot open '" + path.string() + "'");

  char magic[4] = {};
  if (!in.read(magic, 4)) truncated(path);
  if (std::string_view(magic, 4) != kMagic) {
    throw DatasetError(Kind::bad_magic, "'" + path.string() + "' is not a dataset file (bad magic)");
  }
  std::uint32_t version = 0, count = 0, n = 0, nt = 0;
  if (!detail::get_u32(in, version)) truncated(path);
  if (version != kDatasetVersion) {
    throw DatasetError(Kind::bad_version,
                       "unsupported dataset version " + std::to_string(version));
  }
  if (!detail::get_u32(in, count) || !detail::get_u32(in, n) || !detail::get_u32(in, nt)) {
    truncated(path);
  }
  if (n == 0 || nt == 0) throw DatasetError(Kind::invalid, "dataset header has zero dimensions");

  auto read_f32 = [&](double& v) {
    if (!detail::get_f32(in, v)) truncated(path);
  };

  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::uint32_t idx = 0; idx < count; ++idx) {
    Scenario s;
    s.n_pairs = n;
    s.n_tx = nt;
    s.tx_positions.resize(n);
    s.rx_positions.resize(n);
    for (auto& p : s.tx_positions) {
      read_f32(p.x);
      read_f32(p.y);
    }
    for (auto& p : s.rx_positions) {
      read_f32(p.x);
      read_f32(p.y);
    }
    s.channels.resize(static_cast<std::size_t>(n) * n * nt);
    for (auto& h : s.channels) {
      double re = 0.0, im = 0.0;
      read_f32(re);
      read_f32(im);
      h = {re, im};
    }
    s.weights.resize(n);
    for (auto& w : s.weights) read_f32(w);
    s.noise_powers.resize(n);
    for (auto& v : s.noise_powers) read_f32(v);

    std::uint32_t n_edges = 0;
    if (!detail::get_u32(in, n_edges)) truncated(path);
    if (n_edges > static_cast<std::uint64_t>(n) * (n - 1)) {
      throw DatasetError(Kind::invalid, "sample " + std::to_string(idx) + " has too many edges");
    }
    std::vector<Edge> edges(n_edges);
    for (auto& e : edges) {
      if (!detail::get_u32(in, e.src) || !detail::get_u32(in, e.dst)) truncated(path);
      if (e.src >= n || e.dst >= n || e.src == e.dst) {
        throw DatasetError(Kind::invalid, "sample " + std::to_string(idx) + " has an invalid edge");
      }
    }
    Sample sample;
    sample.graph = assemble_graph(s, std::move(edges));
    sample.scenario = std::move(s);
    samples.push_back(std::move(sample));
  }
  return samples;
}

bool same_persisted_fields(const Sample& a, const Sample& b) {
  const Scenario& x = a.scenario;
  const Scenario& y = b.scenario;
  if (x.n_pairs != y.n_pairs || x.n_tx != y.n_tx) return false;
  for (std::size_t i = 0; i < x.n_pairs; ++i) {
    if (x.tx_positions[i].x != y.tx_positions[i].x || x.tx_positions[i].y != y.tx_positions[i].y ||
        x.rx_positions[i].x != y.rx_positions[i].x || x.rx_positions[i].y != y.rx_positions[i].y) {
      return false;
    }
  }
  return x.channels == y.channels && x.weights == y.weights && x.noise_powers == y.noise_powers &&
         a.graph.edges == b.graph.edges && a.graph.vertex_features == b.graph.vertex_features &&
         a.graph.edge_features == b.graph.edge_features;
}

}  // namespace lrgnn
