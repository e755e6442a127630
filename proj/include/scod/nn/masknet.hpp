#pragma once

#include "scod/nn/layers.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scod::nn {

/// Encoder-decoder layout. The encoder halves resolution once per entry of
/// `encoder`; the decoder mirrors it with nearest upsampling and a skip
/// concatenation at every level (the last one with the raw input).
struct Architecture {
  int width = 64;
  int height = 64;
  int in_channels = 6;
  int out_channels = 2;
  std::vector<int> encoder{16, 32, 64};
  int head_width = 16;

  struct Conv {
    std::string name;
    int in = 0;
    int out = 0;
    int kernel = 3;
    int stride = 1;
  };

  /// Throws ShapeMismatch if W or H is not divisible by 2^levels.
  void validate() const;
  int levels() const { return static_cast<int>(encoder.size()); }
  /// Convolutions in execution order: enc0.., mid, dec(L-1)..dec0, head.
  std::vector<Conv> convs() const;
  std::size_t parameter_count() const;

  std::string to_text() const;
  /// Parses and validates; the listed layers must match the ones implied by
  /// the header fields.
  static Architecture parse(std::string_view text);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

template <typename Scalar>
struct Tensor {
  std::vector<int> shape;
  Vec<Scalar> data;

  std::size_t size() const { return static_cast<std::size_t>(data.size()); }
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data.size() == b.data.size() && (a.data.array() == b.data.array()).all();
  }
};

/// Named tensors in conv order, weight (O x C x K x K) then bias (O) per conv.
template <typename Scalar>
struct Params {
  Architecture arch;
  std::vector<std::string> names;
  std::vector<Tensor<Scalar>> tensors;

  std::size_t parameter_count() const;
  /// Weight of conv i viewed as O x (C * K * K).
  Eigen::Map<const Mat<Scalar>> weight(std::size_t conv) const;
  Eigen::Map<const Vec<Scalar>> bias(std::size_t conv) const;
  /// Throws ShapeMismatch if tensors disagree with the architecture.
  void check() const;

  template <typename Other>
  Params<Other> cast() const {
    Params<Other> p;
    p.arch = arch;
    p.names = names;
    for (const Tensor<Scalar>& t : tensors) p.tensors.push_back({t.shape, t.data.template cast<Other>()});
    return p;
  }

  friend bool operator==(const Params& a, const Params& b) {
    return a.arch == b.arch && a.names == b.names && a.tensors == b.tensors;
  }
};

/// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) for weights and biases.
template <typename Scalar>
Params<Scalar> init_params(const Architecture& arch, std::uint64_t seed);

template <typename Scalar>
struct Activations {
  std::vector<FeatureMap<Scalar>> enc;  ///< enc[0] is the input
  FeatureMap<Scalar> mid;
  std::vector<FeatureMap<Scalar>> cat;  ///< decoder input per level
  std::vector<FeatureMap<Scalar>> dec;  ///< decoder output per level
  FeatureMap<Scalar> prob;              ///< out_channels rows, sigmoid output
};

template <typename Scalar>
Activations<Scalar> forward(const Params<Scalar>& params, const FeatureMap<Scalar>& input);

/// Binary targets laid out like the output map: out_channels x (B * H * W).
using TargetMap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct LossGrad {
  double loss = 0.0;
  std::vector<Tensor<Scalar>> grads;
};

/// Mean BCE over every output element and its exact gradient.
template <typename Scalar>
LossGrad<Scalar> loss_and_gradient(const Params<Scalar>& params, const FeatureMap<Scalar>& input,
                                   const TargetMap& target);

template <typename Scalar>
double loss_only(const Params<Scalar>& params, const FeatureMap<Scalar>& input, const TargetMap& target);

}  // namespace scod::nn
