#pragma once

#include "scod/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

namespace scod::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
// Non-deduced views so that Maps over flat parameter storage bind directly.
template <typename Scalar>
using MatRef = std::type_identity_t<Eigen::Ref<const Mat<Scalar>>>;
template <typename Scalar>
using VecRef = std::type_identity_t<Eigen::Ref<const Vec<Scalar>>>;

/// A batch of feature maps stored as channels x (batch * height * width);
/// column index is (b * height + y) * width + x.
template <typename Scalar>
struct FeatureMap {
  int batch = 0;
  int height = 0;
  int width = 0;
  Mat<Scalar> data;

  FeatureMap() = default;
  FeatureMap(int channels, int batch_, int height_, int width_)
      : batch(batch_), height(height_), width(width_), data(Mat<Scalar>::Zero(channels, batch_ * height_ * width_)) {}

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
  Scalar& at(int c, int b, int y, int x) { return data(c, (b * height + y) * width + x); }
  Scalar at(int c, int b, int y, int x) const { return data(c, (b * height + y) * width + x); }
};

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  int out_size(int in) const { return (in + 2 * padding - kernel) / stride + 1; }
};

namespace detail {

/// Output positions [lo, hi) whose tap o * stride + k - padding lands in [0, size).
inline std::pair<int, int> valid_range(int size, int out, int k, const ConvGeometry& g) {
  const int shift = k - g.padding;
  int lo = shift >= 0 ? 0 : (-shift + g.stride - 1) / g.stride;
  int hi = size - 1 - shift < 0 ? 0 : (size - 1 - shift) / g.stride + 1;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

}  // namespace detail

/// Unfolds the receptive fields of output rows [r0, r0 + nr) into `cols`,
/// where output row r is row r % Ho of sample r / Ho. Row index of `cols` is
/// (c * K + ky) * K + kx, matching an O x C x K x K kernel flattened
/// row-major; column index is (r - r0) * Wo + ox.
template <typename Scalar>
void im2col(const FeatureMap<Scalar>& in, const ConvGeometry& g, int r0, int nr, Mat<Scalar>& cols) {
  const int C = in.channels(), K = g.kernel;
  const int Ho = g.out_size(in.height), Wo = g.out_size(in.width);
  cols.resize(C * K * K, nr * Wo);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < K; ++ky) {
      const auto [ylo, yhi] = detail::valid_range(in.height, Ho, ky, g);
      for (int kx = 0; kx < K; ++kx) {
        const auto [xlo, xhi] = detail::valid_range(in.width, Wo, kx, g);
        const int shift = kx - g.padding;
        Scalar* row = cols.row((c * K + ky) * K + kx).data();
        for (int r = r0; r < r0 + nr; ++r) {
          const int b = r / Ho, oy = r % Ho;
          Scalar* dst = row + (r - r0) * Wo;
          if (oy < ylo || oy >= yhi) {
            std::fill(dst, dst + Wo, Scalar(0));
            continue;
          }
          const int iy = oy * g.stride + ky - g.padding;
          const Scalar* src = in.data.row(c).data() + (b * in.height + iy) * in.width;
          std::fill(dst, dst + xlo, Scalar(0));
          if (g.stride == 1) {
            std::copy(src + xlo + shift, src + xhi + shift, dst + xlo);
          } else {
            for (int ox = xlo; ox < xhi; ++ox) dst[ox] = src[ox * g.stride + shift];
          }
          std::fill(dst + xhi, dst + Wo, Scalar(0));
        }
      }
    }
  }
}

template <typename Scalar>
Mat<Scalar> im2col(const FeatureMap<Scalar>& in, const ConvGeometry& g) {
  Mat<Scalar> cols;
  im2col(in, g, 0, in.batch * g.out_size(in.height), cols);
  return cols;
}

/// Adjoint of im2col: adds column gradients of output rows [r0, r0 + nr)
/// back onto the input grid `out`.
template <typename Scalar>
void col2im(const Mat<Scalar>& cols, const ConvGeometry& g, int r0, int nr, FeatureMap<Scalar>& out) {
  const int K = g.kernel;
  const int Ho = g.out_size(out.height), Wo = g.out_size(out.width);
  for (int c = 0; c < out.channels(); ++c) {
    for (int ky = 0; ky < K; ++ky) {
      const auto [ylo, yhi] = detail::valid_range(out.height, Ho, ky, g);
      for (int kx = 0; kx < K; ++kx) {
        const auto [xlo, xhi] = detail::valid_range(out.width, Wo, kx, g);
        const int shift = kx - g.padding;
        const Scalar* row = cols.row((c * K + ky) * K + kx).data();
        for (int r = r0; r < r0 + nr; ++r) {
          const int b = r / Ho, oy = r % Ho;
          if (oy < ylo || oy >= yhi) continue;
          const int iy = oy * g.stride + ky - g.padding;
          const Scalar* src = row + (r - r0) * Wo;
          Scalar* dst = out.data.row(c).data() + (b * out.height + iy) * out.width;
          for (int ox = xlo; ox < xhi; ++ox) dst[ox * g.stride + shift] += src[ox];
        }
      }
    }
  }
}

namespace detail {

/// Output rows per unfolding chunk: keeps the unfolded block around 128K
/// values so it stays in cache between im2col and the product.
inline int chunk_rows(int unfolded_rows, int out_width, int total_rows) {
  const long per = static_cast<long>(unfolded_rows) * out_width;
  return static_cast<int>(std::clamp<long>((1L << 17) / std::max(per, 1L), 1L, static_cast<long>(total_rows)));
}

}  // namespace detail

/// Cross-correlation with zero padding. `weight` is O x (C * K * K).
template <typename Scalar>
FeatureMap<Scalar> conv2d(const FeatureMap<Scalar>& in, MatRef<Scalar> weight, VecRef<Scalar> bias,
                          const ConvGeometry& g) {
  if (weight.cols() != in.channels() * g.kernel * g.kernel || bias.size() != weight.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "conv2d kernel does not match input channels");
  }
  if (g.out_size(in.height) < 1 || g.out_size(in.width) < 1) throw Error(ErrorKind::ShapeMismatch, "conv2d input too small");
  FeatureMap<Scalar> out;
  out.batch = in.batch;
  out.height = g.out_size(in.height);
  out.width = g.out_size(in.width);
  out.data.resize(weight.rows(), in.batch * out.pixels());
  const int rows = in.batch * out.height;
  const int step = detail::chunk_rows(static_cast<int>(weight.cols()), out.width, rows);
  Mat<Scalar> cols;
  for (int r = 0; r < rows; r += step) {
    const int nr = std::min(step, rows - r);
    im2col(in, g, r, nr, cols);
    out.data.middleCols(r * out.width, nr * out.width).noalias() = weight * cols;
  }
  out.data.colwise() += bias;
  return out;
}

/// Kernel of the adjoint convolution: W'[c][o][ky][kx] = W[o][c][K-1-ky][K-1-kx].
template <typename Scalar>
Mat<Scalar> flip_kernel(MatRef<Scalar> weight, int kernel) {
  const int O = static_cast<int>(weight.rows());
  const int KK = kernel * kernel;
  const int C = static_cast<int>(weight.cols()) / KK;
  Mat<Scalar> out(C, O * KK);
  for (int o = 0; o < O; ++o) {
    for (int c = 0; c < C; ++c) {
      for (int k = 0; k < KK; ++k) out(c, o * KK + k) = weight(o, c * KK + (KK - 1 - k));
    }
  }
  return out;
}

template <typename Scalar>
struct ConvGrads {
  FeatureMap<Scalar> input;
  Mat<Scalar> weight;
  Vec<Scalar> bias;
};

/// Same-size stride-1 convolutions take the input gradient as a convolution
/// of `dout` with the flipped kernel; strided ones scatter through col2im.
template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const FeatureMap<Scalar>& in, MatRef<Scalar> weight, const ConvGeometry& g,
                                  const FeatureMap<Scalar>& dout, bool need_input_grad = true) {
  ConvGrads<Scalar> r;
  const bool same = g.stride == 1 && 2 * g.padding == g.kernel - 1;
  r.weight = Mat<Scalar>::Zero(weight.rows(), weight.cols());
  r.bias = dout.data.rowwise().sum();
  if (need_input_grad && !same) r.input = FeatureMap<Scalar>(in.channels(), in.batch, in.height, in.width);
  const int rows = dout.batch * dout.height;
  const int step = detail::chunk_rows(static_cast<int>(weight.cols()), dout.width, rows);
  Mat<Scalar> cols;
  for (int row = 0; row < rows; row += step) {
    const int nr = std::min(step, rows - row);
    const auto dblock = dout.data.middleCols(row * dout.width, nr * dout.width);
    im2col(in, g, row, nr, cols);
    r.weight.noalias() += dblock * cols.transpose();
    if (need_input_grad && !same) {
      cols.noalias() = weight.transpose() * dblock;
      col2im(cols, g, row, nr, r.input);
    }
  }
  if (need_input_grad && same) {
    const Mat<Scalar> flipped = flip_kernel<Scalar>(weight, g.kernel);
    r.input = conv2d(dout, flipped, Vec<Scalar>::Zero(flipped.rows()), g);
  }
  return r;
}

template <typename Scalar>
void relu_inplace(FeatureMap<Scalar>& x) {
  x.data = x.data.cwiseMax(Scalar(0));
}

/// Gradient through a ReLU given its output.
template <typename Scalar>
void relu_backward_inplace(const FeatureMap<Scalar>& out, FeatureMap<Scalar>& grad) {
  grad.data = (out.data.array() > Scalar(0)).select(grad.data, Scalar(0));
}

template <typename Scalar>
FeatureMap<Scalar> upsample2x(const FeatureMap<Scalar>& in) {
  FeatureMap<Scalar> out(in.channels(), in.batch, 2 * in.height, 2 * in.width);
  for (int c = 0; c < in.channels(); ++c) {
    for (int b = 0; b < in.batch; ++b) {
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) out.at(c, b, y, x) = in.at(c, b, y / 2, x / 2);
      }
    }
  }
  return out;
}

template <typename Scalar>
FeatureMap<Scalar> upsample2x_backward(const FeatureMap<Scalar>& dout) {
  FeatureMap<Scalar> din(dout.channels(), dout.batch, dout.height / 2, dout.width / 2);
  for (int c = 0; c < dout.channels(); ++c) {
    for (int b = 0; b < dout.batch; ++b) {
      for (int y = 0; y < dout.height; ++y) {
        for (int x = 0; x < dout.width; ++x) din.at(c, b, y / 2, x / 2) += dout.at(c, b, y, x);
      }
    }
  }
  return din;
}

/// Channel concatenation [a; b].
template <typename Scalar>
FeatureMap<Scalar> concat(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b) {
  if (a.batch != b.batch || a.height != b.height || a.width != b.width) {
    throw Error(ErrorKind::ShapeMismatch, "concat of maps with different spatial size");
  }
  FeatureMap<Scalar> out;
  out.batch = a.batch;
  out.height = a.height;
  out.width = a.width;
  out.data.resize(a.channels() + b.channels(), a.data.cols());
  out.data << a.data, b.data;
  return out;
}

/// Rows [first, first + count) of a map.
template <typename Scalar>
FeatureMap<Scalar> channel_slice(const FeatureMap<Scalar>& x, int first, int count) {
  FeatureMap<Scalar> out;
  out.batch = x.batch;
  out.height = x.height;
  out.width = x.width;
  out.data = x.data.middleRows(first, count);
  return out;
}

template <typename Scalar>
void sigmoid_inplace(FeatureMap<Scalar>& x) {
  x.data = (Scalar(1) + (-x.data.array()).exp()).inverse().matrix();
}

inline constexpr double kProbEpsilon = 1e-7;

/// Mean binary cross-entropy; probabilities are clamped to [eps, 1 - eps].
/// Accumulates in double regardless of Scalar.
template <typename ProbDerived, typename TargetDerived>
double bce_loss(const Eigen::DenseBase<ProbDerived>& prob, const Eigen::DenseBase<TargetDerived>& target) {
  if (prob.rows() != target.rows() || prob.cols() != target.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "bce_loss prob and target shapes differ");
  }
  double sum = 0.0;
  for (Eigen::Index r = 0; r < prob.rows(); ++r) {
    for (Eigen::Index c = 0; c < prob.cols(); ++c) {
      const double p = std::clamp(static_cast<double>(prob(r, c)), kProbEpsilon, 1.0 - kProbEpsilon);
      sum -= target(r, c) != 0 ? std::log(p) : std::log1p(-p);
    }
  }
  return sum / static_cast<double>(prob.size());
}

/// d(mean BCE)/d(logit) for a sigmoid output: (p - t) / n inside the clamp
/// interval, zero where the clamp is active.
template <typename Scalar>
Scalar bce_logit_grad(Scalar p, bool target, double n) {
  const double pd = static_cast<double>(p);
  if (pd < kProbEpsilon || pd > 1.0 - kProbEpsilon) return Scalar(0);
  return static_cast<Scalar>((pd - (target ? 1.0 : 0.0)) / n);
}

}  // namespace scod::nn
