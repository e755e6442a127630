#pragma once

#include "scod/nn/masknet.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scod::nn {

// Params file: "SCNP", version byte, u32-length descriptor text, u32 tensor
// count, then per tensor a u32-length name, u32 rank, u32 dims and the
// little-endian f32 values.
inline constexpr std::uint8_t kParamsVersion = 1;

std::vector<std::uint8_t> encode_params(const Params<float>& p);
/// Throws Format on bad magic/version and ShapeMismatch when the tensors
/// disagree with the descriptor.
Params<float> decode_params(std::span<const std::uint8_t> bytes);

void save_params(const std::string& path, const Params<float>& p);
Params<float> load_params(const std::string& path);

}  // namespace scod::nn
