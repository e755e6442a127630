#include "scod/maskpred.hpp"

#include "scod/error.hpp"
#include "scod/nn/train.hpp"

#include <cstdlib>

namespace scod {

std::pair<ProbImage, ProbImage> predict_masks(const nn::Params<float>& params, const RgbImage& obs1,
                                              const RgbImage& obs2) {
  MaskTuple t;
  t.obs1 = obs1;
  t.obs2 = obs2;
  const MaskTuple* batch[] = {&t};
  const nn::FeatureMap<float> prob = nn::forward(params, nn::make_input(batch)).prob;
  const int H = prob.height, W = prob.width;
  ProbImage p1 = Eigen::Map<const ProbImage>(prob.data.row(0).data(), H, W);
  ProbImage p2 = Eigen::Map<const ProbImage>(prob.data.row(1).data(), H, W);
  return {std::move(p1), std::move(p2)};
}

std::pair<Mask, Mask> naive_subtract(const RgbImage& obs1, const RgbImage& obs2, int threshold) {
  if (obs1.width() != obs2.width() || obs1.height() != obs2.height()) {
    throw Error(ErrorKind::DimensionMismatch, "observations differ in size");
  }
  Mask m = Mask::Zero(obs1.height(), obs1.width());
  for (int y = 0; y < obs1.height(); ++y) {
    for (int x = 0; x < obs1.width(); ++x) {
      int d = 0;
      for (int ch = 0; ch < 3; ++ch) d = std::max(d, std::abs(int{obs1(y, x, ch)} - int{obs2(y, x, ch)}));
      m(y, x) = d > threshold ? 1 : 0;
    }
  }
  return {m, m};
}

}  // namespace scod
