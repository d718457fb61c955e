#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lrgnn/mpgnn.hpp"

namespace lrgnn {

/// Model file ("LRGM", version 1, little-endian):
///   magic[4] version:u32 flags:u32 (bit0 = low-rank) Nt:u32 a1:u32 a2:u32 (both 0 if dense)
///   then MLP1 layer 0, MLP1 layer 1, MLP2 layer 0, MLP2 layer 1, each as
///   d_in:u32 d_out:u32 r:u32 (0 if dense) followed by f32 arrays
///   (dense: W row-major then b; low-rank: U, V, b).
/// Round count and P_max are not stored; loads report the defaults.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kModelVersion = 1;

struct LoadedModel {
  MpgnnArch arch;
  MpgnnParams params;
};

void save_model(const MpgnnArch& arch, const MpgnnParams& params, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace lrgnn
