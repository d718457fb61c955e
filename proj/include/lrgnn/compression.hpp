#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrgnn/mpgnn.hpp"
#include "lrgnn/nn.hpp"

namespace lrgnn::compression {

/// Closed-form parameter-reduction fraction for the MPGNN shape (bias-free):
/// p = (-3 Nt a1 - 3 Nt a2 + 1728 Nt - 96 a1 - 544 a2 + 18432) / (576 (3 Nt + 32)).
/// Ranks of 0 are accepted as the degenerate zero-rank case.
double reduction_fraction(long n_tx, double a1, double a2);

/// Rows follow a1_values, columns a2_values.
struct ReductionGrid {
  std::size_t n_tx = 0;
  std::vector<std::size_t> a1_values;
  std::vector<std::size_t> a2_values;
  std::vector<std::vector<double>> p;      // 1 - low_rank / dense
  std::vector<std::vector<double>> ratio;  // dense / low_rank
};

inline const std::vector<std::size_t> kTableA1 = {4, 16, 32, 64};
inline const std::vector<std::size_t> kTableA2 = {4, 16, 32, 64, 128, 256, 512};

/// Ratios from bias-free parameter counts. Each cell is cross-checked against
/// reduction_fraction (|p - (1 - 1/ratio)| <= 1e-12 relative); a mismatch throws
/// std::logic_error.
ReductionGrid size_ratio_table(std::size_t n_tx, const std::vector<std::size_t>& a1_values,
                               const std::vector<std::size_t>& a2_values);

struct WeightStats {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  double excess_kurtosis = 0.0;  // 0 when the spread is zero
};

/// Histograms of every weight matrix (biases excluded) on shared bin edges,
/// plus a pooled histogram over all of them.
struct WeightHistogram {
  std::vector<double> edges;                     // n_bins + 1
  std::vector<std::string> names;                // per matrix
  std::vector<std::vector<std::size_t>> counts;  // per matrix, n_bins each
  std::vector<std::size_t> pooled;
  std::vector<WeightStats> stats;                // per matrix, then "pooled"
};

/// Throws std::invalid_argument when there are no weights or n_bins == 0.
WeightHistogram weight_histogram(const MpgnnParams& params, std::size_t n_bins);

WeightStats describe(const std::string& name, std::span<const double> values);

/// Singular values of a row-major rows x cols matrix, descending.
std::vector<double> singular_values(std::span<const double> matrix, std::size_t rows, std::size_t cols);

/// Eigenvalue magnitudes of a square row-major matrix, descending.
std::vector<double> eigenvalue_magnitudes(std::span<const double> matrix, std::size_t n);

struct LayerSpectrum {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> singular_values;
  std::vector<double> eigen_magnitudes;  // empty unless square
};

/// Spectra of each layer's effective weight (d_out x d_in).
std::vector<LayerSpectrum> layer_spectra(const MpgnnParams& params);

/// Best rank-r approximation of a dense layer, split as U = Q_r S^1/2 and
/// V = (P_r S^1/2)^T for W = P S Q^T. The bias is copied.
nn::LowRankLinear svd_truncate(const nn::DenseLinear& layer, std::size_t rank);

/// Squared Frobenius norm of W - W_eff.
double reconstruction_error2(const nn::DenseLinear& layer, const nn::LowRankLinear& approx);

/// On-disk byte count. Throws std::invalid_argument for an empty path and
/// std::filesystem::filesystem_error for IO failures.
std::uintmax_t model_disk_size(const std::filesystem::path& path);

void write_grid_csv(const ReductionGrid& grid, bool ratios, const std::filesystem::path& path);
void write_histogram_csv(const WeightHistogram& hist, const std::filesystem::path& path);
void write_stats_csv(const WeightHistogram& hist, const std::filesystem::path& path);
void write_spectra_csv(const std::vector<LayerSpectrum>& spectra, const std::filesystem::path& path);

}  // namespace lrgnn::compression
