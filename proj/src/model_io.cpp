#include "lrgnn/model_io.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace lrgnn {
namespace {

constexpr std::string_view kMagic = "LRGM";
constexpr std::uint32_t kFlagLowRank = 1u;

std::vector<const nn::Linear*> layers_of(const MpgnnParams& p) {
  std::vector<const nn::Linear*> out;
  for (const auto& l : p.mlp1.layers()) out.push_back(&l);
  for (const auto& l : p.mlp2.layers()) out.push_back(&l);
  return out;
}

std::vector<nn::Linear*> layers_of(MpgnnParams& p) {
  std::vector<nn::Linear*> out;
  for (auto& l : p.mlp1.layers()) out.push_back(&l);
  for (auto& l : p.mlp2.layers()) out.push_back(&l);
  return out;
}

}  // namespace

void save_model(const MpgnnArch& arch, const MpgnnParams& params, const std::filesystem::path& path) {
  arch.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError("cannot open '" + path.string() + "' for writing");
  detail::put_tag(out, kMagic);
  detail::put_u32(out, kModelVersion);
  detail::put_u32(out, arch.is_low_rank() ? kFlagLowRank : 0u);
  detail::put_u32(out, static_cast<std::uint32_t>(arch.n_tx));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.is_low_rank() ? arch.rank_mlp1 : 0));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.is_low_rank() ? arch.rank_mlp2 : 0));
  for (const nn::Linear* layer : layers_of(params)) {
    detail::put_u32(out, static_cast<std::uint32_t>(layer->in_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(layer->out_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(layer->rank()));
    for (auto array : layer->arrays()) {
      for (double v : array) detail::put_f32(out, v);
    }
  }
  if (!out) throw ModelFormatError("write to '" + path.string() + "' failed");
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model '" + path.string() + "'");
  auto fail = [&](const std::string& why) -> ModelFormatError {
    return ModelFormatError("model '" + path.string() + "': " + why);
  };

  char magic[4] = {};
  if (!in.read(magic, 4)) throw fail("truncated header");
  if (std::string_view(magic, 4) != kMagic) throw fail("bad magic");
  std::uint32_t version = 0, flags = 0, nt = 0, a1 = 0, a2 = 0;
  if (!detail::get_u32(in, version)) throw fail("truncated header");
  if (version != kModelVersion) throw fail("unsupported version " + std::to_string(version));
  if (!detail::get_u32(in, flags) || !detail::get_u32(in, nt) || !detail::get_u32(in, a1) ||
      !detail::get_u32(in, a2)) {
    throw fail("truncated header");
  }
  if ((flags & ~kFlagLowRank) != 0) throw fail("unknown flag bits");

  LoadedModel model;
  model.arch = (flags & kFlagLowRank) ? MpgnnArch::low_rank(nt, a1, a2) : MpgnnArch::dense(nt);
  if (!(flags & kFlagLowRank) && (a1 != 0 || a2 != 0)) throw fail("dense model with nonzero ranks");
  try {
    model.params = make_params(model.arch);
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }

  for (nn::Linear* layer : layers_of(model.params)) {
    std::uint32_t d_in = 0, d_out = 0, r = 0;
    if (!detail::get_u32(in, d_in) || !detail::get_u32(in, d_out) || !detail::get_u32(in, r)) {
      throw fail("truncated layer header");
    }
    if (d_in != layer->in_dim() || d_out != layer->out_dim() || r != layer->rank()) {
      throw fail("layer shape does not match the declared architecture");
    }
    for (auto array : layer->arrays()) {
      for (auto& v : array) {
        if (!detail::get_f32(in, v)) throw fail("truncated parameter data");
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes after the last layer");
  return model;
}

}  // namespace lrgnn
