#include "scod/nn/params_io.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"

#include <algorithm>

namespace scod::nn {

namespace {
constexpr std::string_view kMagic = "SCNP";
}

std::vector<std::uint8_t> encode_params(const Params<float>& p) {
  p.check();
  ByteWriter w;
  w.raw(kMagic);
  w.u8(kParamsVersion);
  w.str(p.arch.to_text());
  w.u32(static_cast<std::uint32_t>(p.tensors.size()));
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    const Tensor<float>& t = p.tensors[i];
    w.str(p.names[i]);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (Eigen::Index k = 0; k < t.data.size(); ++k) w.f32(t.data[k]);
  }
  return w.take();
}

Params<float> decode_params(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw Error(ErrorKind::Format, "bad SCNP magic");
  if (r.u8() != kParamsVersion) throw Error(ErrorKind::Format, "unsupported SCNP version");
  Params<float> p;
  p.arch = Architecture::parse(r.str());
  const std::uint32_t count = r.u32();
  if (count > r.remaining()) throw Error(ErrorKind::Format, "implausible tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    p.names.push_back(r.str());
    Tensor<float> t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw Error(ErrorKind::Format, "implausible tensor rank");
    std::size_t size = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(static_cast<int>(r.u32()));
      size *= static_cast<std::size_t>(t.shape.back());
    }
    if (size * 4 > r.remaining()) throw Error(ErrorKind::Format, "tensor data truncated");
    t.data.resize(static_cast<Eigen::Index>(size));
    for (std::size_t k = 0; k < size; ++k) t.data[static_cast<Eigen::Index>(k)] = r.f32();
    if (!t.data.allFinite()) throw Error(ErrorKind::Format, "non-finite parameter value");
    p.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw Error(ErrorKind::Format, "trailing bytes after params");
  p.check();
  return p;
}

void save_params(const std::string& path, const Params<float>& p) { write_file(path, encode_params(p)); }

Params<float> load_params(const std::string& path) { return decode_params(read_file(path)); }

}  // namespace scod::nn
