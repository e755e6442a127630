#pragma once

#include "scod/nn/masknet.hpp"
#include "scod/render.hpp"

#include <utility>

namespace scod {

using ProbImage = Image<float>;

/// Per-pixel probabilities for (mask1, mask2) from a trained network.
std::pair<ProbImage, ProbImage> predict_masks(const nn::Params<float>& params, const RgbImage& obs1,
                                              const RgbImage& obs2);

/// m[p] = 1 iff the largest per-channel absolute difference exceeds
/// `threshold`; both returned masks equal m. Throws DimensionMismatch.
std::pair<Mask, Mask> naive_subtract(const RgbImage& obs1, const RgbImage& obs2, int threshold = 0);

}  // namespace scod
