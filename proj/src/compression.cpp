#include "lrgnn/compression.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace lrgnn::compression {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(std::span<const double> m, std::size_t rows, std::size_t cols) {
  if (m.size() != rows * cols) throw std::invalid_argument("matrix buffer size does not match its shape");
  return {m.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

double reduction_fraction(long n_tx, double a1, double a2) {
  if (n_tx <= 0) throw std::invalid_argument("Nt must be positive");
  if (a1 < 0.0 || a2 < 0.0) throw std::invalid_argument("ranks must be non-negative");
  const double nt = static_cast<double>(n_tx);
  const double num = -3.0 * nt * a1 - 3.0 * nt * a2 + 1728.0 * nt - 96.0 * a1 - 544.0 * a2 + 18432.0;
  return num / (576.0 * (3.0 * nt + 32.0));
}

ReductionGrid size_ratio_table(std::size_t n_tx, const std::vector<std::size_t>& a1_values,
                               const std::vector<std::size_t>& a2_values) {
  ReductionGrid grid;
  grid.n_tx = n_tx;
  grid.a1_values = a1_values;
  grid.a2_values = a2_values;
  const double dense = static_cast<double>(count_model_params(MpgnnArch::dense(n_tx), false).total);
  for (std::size_t a1 : a1_values) {
    auto& p_row = grid.p.emplace_back();
    auto& r_row = grid.ratio.emplace_back();
    for (std::size_t a2 : a2_values) {
      const double lr =
          static_cast<double>(count_model_params(MpgnnArch::low_rank(n_tx, a1, a2), false).total);
      const double ratio = dense / lr;
      const double p = reduction_fraction(static_cast<long>(n_tx), static_cast<double>(a1),
                                          static_cast<double>(a2));
      const double from_ratio = 1.0 - 1.0 / ratio;
      if (std::abs(p - from_ratio) > 1e-12 * std::max(1.0, std::abs(p))) {
        throw std::logic_error("closed-form reduction fraction disagrees with parameter counts at (" +
                               std::to_string(a1) + ", " + std::to_string(a2) + ")");
      }
      p_row.push_back(p);
      r_row.push_back(ratio);
    }
  }
  return grid;
}

WeightStats describe(const std::string& name, std::span<const double> values) {
  WeightStats s;
  s.name = name;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(values.size());
  m4 /= static_cast<double>(values.size());
  s.stddev = std::sqrt(m2);
  s.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  return s;
}

WeightHistogram weight_histogram(const MpgnnParams& params, std::size_t n_bins) {
  if (n_bins == 0) throw std::invalid_argument("n_bins must be >= 1");
  std::vector<nn::NamedArray> weights;
  std::vector<double> all;
  for (auto& a : params.named_arrays()) {
    if (a.is_bias) continue;
    all.insert(all.end(), a.values.begin(), a.values.end());
    weights.push_back(std::move(a));
  }
  if (all.empty()) throw std::invalid_argument("no weights to histogram");

  auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  WeightHistogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(n_bins);
  }
  auto bin_of = [&](double v) {
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n_bins));
    return std::min(b, n_bins - 1);
  };
  h.pooled.assign(n_bins, 0);
  for (const auto& w : weights) {
    h.names.push_back(w.name);
    auto& counts = h.counts.emplace_back(n_bins, 0);
    for (double v : w.values) {
      const std::size_t b = bin_of(v);
      ++counts[b];
      ++h.pooled[b];
    }
    h.stats.push_back(describe(w.name, w.values));
  }
  h.stats.push_back(describe("pooled", all));
  return h;
}

std::vector<double> singular_values(std::span<const double> matrix, std::size_t rows, std::size_t cols) {
  const auto m = view(matrix, rows, cols);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> eigenvalue_magnitudes(std::span<const double> matrix, std::size_t n) {
  const auto m = view(matrix, n, n);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  std::vector<double> out;
  for (const auto& ev : solver.eigenvalues()) out.push_back(std::abs(ev));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<LayerSpectrum> layer_spectra(const MpgnnParams& params) {
  std::vector<LayerSpectrum> out;
  auto add = [&](const nn::Mlp& mlp, const std::string& prefix) {
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
      const auto& layer = mlp.layers()[l];
      LayerSpectrum s;
      s.name = prefix + "." + std::to_string(l);
      s.rows = layer.out_dim();
      s.cols = layer.in_dim();
      const auto w = layer.effective_weight();
      s.singular_values = singular_values(w, s.rows, s.cols);
      if (s.rows == s.cols) s.eigen_magnitudes = eigenvalue_magnitudes(w, s.rows);
      out.push_back(std::move(s));
    }
  };
  add(params.mlp1, "mlp1");
  add(params.mlp2, "mlp2");
  return out;
}

nn::LowRankLinear svd_truncate(const nn::DenseLinear& layer, std::size_t rank) {
  if (rank == 0 || rank > std::min(layer.d_in, layer.d_out)) {
    throw std::invalid_argument("truncation rank " + std::to_string(rank) + " out of bounds");
  }
  const auto w = view(layer.weight, layer.d_out, layer.d_in);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const auto& left = svd.matrixU();    // d_out x m
  const auto& right = svd.matrixV();   // d_in x m

  nn::LowRankLinear out(layer.d_in, layer.d_out, rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const double root = std::sqrt(s(static_cast<Eigen::Index>(k)));
    for (std::size_t i = 0; i < layer.d_in; ++i) {
      out.u[i * rank + k] = right(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * root;
    }
    for (std::size_t o = 0; o < layer.d_out; ++o) {
      out.v[k * layer.d_out + o] = left(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(k)) * root;
    }
  }
  out.bias = layer.bias;
  return out;
}

double reconstruction_error2(const nn::DenseLinear& layer, const nn::LowRankLinear& approx) {
  if (approx.d_in != layer.d_in || approx.d_out != layer.d_out) {
    throw std::invalid_argument("approximation shape does not match the layer");
  }
  const auto w_eff = nn::Linear(approx).effective_weight();
  double err = 0.0;
  for (std::size_t i = 0; i < w_eff.size(); ++i) {
    const double d = layer.weight[i] - w_eff[i];
    err += d * d;
  }
  return err;
}

std::uintmax_t model_disk_size(const std::filesystem::path& path) {
  if (path.empty()) throw std::invalid_argument("model path is empty");
  return std::filesystem::file_size(path);
}

void write_grid_csv(const ReductionGrid& grid, bool ratios, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "a1/a2";
  for (std::size_t a2 : grid.a2_values) out << ',' << a2;
  out << '\n';
  const auto& cells = ratios ? grid.ratio : grid.p;
  for (std::size_t r = 0; r < grid.a1_values.size(); ++r) {
    out << grid.a1_values[r];
    for (double v : cells[r]) out << ',' << v;
    out << '\n';
  }
}

void write_histogram_csv(const WeightHistogram& hist, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "bin_lo,bin_hi,pooled";
  for (const auto& name : hist.names) out << ',' << name;
  out << '\n';
  for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
    out << hist.edges[b] << ',' << hist.edges[b + 1] << ',' << hist.pooled[b];
    for (const auto& counts : hist.counts) out << ',' << counts[b];
    out << '\n';
  }
}

void write_stats_csv(const WeightHistogram& hist, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "matrix,count,mean,std,min,max,excess_kurtosis\n";
  for (const auto& s : hist.stats) {
    out << s.name << ',' << s.count << ',' << s.mean << ',' << s.stddev << ',' << s.min << ','
        << s.max << ',' << s.excess_kurtosis << '\n';
  }
}

void write_spectra_csv(const std::vector<LayerSpectrum>& spectra, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "matrix,rows,cols,index,singular_value,eigen_magnitude\n";
  for (const auto& s : spectra) {
    for (std::size_t i = 0; i < s.singular_values.size(); ++i) {
      out << s.name << ',' << s.rows << ',' << s.cols << ',' << i << ',' << s.singular_values[i] << ',';
      if (i < s.eigen_magnitudes.size()) out << s.eigen_magnitudes[i];
      out << '\n';
    }
  }
}

}  // namespace lrgnn::compression
