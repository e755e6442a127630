#pragma once

#include "scod/render.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scod {

/// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Binary PGM (P5) of a mask, written as {0, 255}. Decoding maps nonzero to 1.
std::vector<std::uint8_t> encode_mask_pgm(const Mask& mask);
Mask decode_mask_pgm(std::span<const std::uint8_t> bytes);

/// Binary PGM of an arbitrary 8-bit gray image.
std::vector<std::uint8_t> encode_pgm(const Image<std::uint8_t>& gray);
Image<std::uint8_t> decode_pgm(std::span<const std::uint8_t> bytes);

void write_ppm(const std::string& path, const RgbImage& img);
void write_mask_pgm(const std::string& path, const Mask& mask);

}  // namespace scod
