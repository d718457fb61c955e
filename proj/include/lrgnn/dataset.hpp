#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrgnn/scenario.hpp"

namespace lrgnn {

/// Dataset file ("LRGD", version 1, little-endian):
///   magic[4] version:u32 n_samples:u32 N:u32 Nt:u32
///   per sample:
///     TX (x, y) f32 x N, RX (x, y) f32 x N,
///     H as N*N*Nt (re, im) f32 pairs in (tx, rx, antenna) order,
///     w f32 x N, sigma^2 f32 x N, edge_count:u32, (src:u32, dst:u32) x edge_count
class DatasetError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, invalid };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::vector<Sample> read_dataset(const std::filesystem::path& path);

/// Field-by-field equality of everything a dataset file persists.
bool same_persisted_fields(const Sample& a, const Sample& b);

}  // namespace lrgnn
