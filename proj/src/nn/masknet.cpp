#include "scod/nn/masknet.hpp"

#include "scod/error.hpp"
#include "scod/kvtext.hpp"
#include "scod/rng.hpp"

#include <cmath>
#include <sstream>

namespace scod::nn {

void Architecture::validate() const {
  if (width <= 0 || height <= 0 || in_channels <= 0 || out_channels <= 0 || head_width <= 0 || encoder.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "architecture sizes must be positive");
  }
  for (int w : encoder) {
    if (w <= 0) throw Error(ErrorKind::ShapeMismatch, "encoder widths must be positive");
  }
  const int step = 1 << levels();
  if (width % step != 0 || height % step != 0) {
    throw Error(ErrorKind::ShapeMismatch, "input size must be divisible by 2^levels");
  }
}

std::vector<Architecture::Conv> Architecture::convs() const {
  std::vector<Conv> out;
  const int L = levels();
  int c = in_channels;
  for (int i = 0; i < L; ++i) {
    out.push_back({"enc" + std::to_string(i), c, encoder[static_cast<std::size_t>(i)], 3, 2});
    c = encoder[static_cast<std::size_t>(i)];
  }
  out.push_back({"mid", c, c, 3, 1});
  for (int i = L - 1; i >= 0; --i) {
    const int skip = i == 0 ? in_channels : encoder[static_cast<std::size_t>(i - 1)];
    const int width_out = i == 0 ? head_width : encoder[static_cast<std::size_t>(i - 1)];
    out.push_back({"dec" + std::to_string(i), c + skip, width_out, 3, 1});
    c = width_out;
  }
  out.push_back({"head", c, out_channels, 1, 1});
  return out;
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  for (const Conv& c : convs()) n += static_cast<std::size_t>(c.out) * (c.in * c.kernel * c.kernel + 1);
  return n;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> ints(const KvSection& s, std::string_view key) {
  std::vector<int> out;
  for (double d : s.numbers(key)) {
    if (d != std::floor(d)) throw Error(ErrorKind::Format, std::string(key) + " must hold integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

}  // namespace

std::string Architecture::to_text() const {
  std::vector<KvSection> s(1);
  s[0].set("input", join_ints({in_channels, width, height}));
  s[0].set("output", std::to_string(out_channels));
  s[0].set("encoder", join_ints(encoder));
  s[0].set("head", std::to_string(head_width));
  for (const Conv& c : convs()) {
    KvSection layer;
    layer.name = "layer";
    layer.arg = c.name;
    layer.set("shape", join_ints({c.in, c.out, c.kernel, c.stride}));
    s.push_back(std::move(layer));
  }
  return format_kv(s);
}

Architecture Architecture::parse(std::string_view text) {
  const auto sections = parse_kv(text);
  if (sections.empty() || !sections[0].name.empty()) throw Error(ErrorKind::Format, "descriptor header missing");
  const KvSection& h = sections[0];
  h.require_known({"input", "output", "encoder", "head"});
  Architecture a;
  const auto input = ints(h, "input");
  if (input.size() != 3) throw Error(ErrorKind::Format, "input needs channels width height");
  a.in_channels = input[0];
  a.width = input[1];
  a.height = input[2];
  a.out_channels = static_cast<int>(h.integer("output"));
  a.encoder = ints(h, "encoder");
  a.head_width = static_cast<int>(h.integer("head"));
  a.validate();

  const auto expected = a.convs();
  if (sections.size() != expected.size() + 1) throw Error(ErrorKind::ShapeMismatch, "descriptor layer count mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const KvSection& s = sections[i + 1];
    s.require_known({"shape"});
    const Conv& e = expected[i];
    if (s.name != "layer" || s.arg != e.name || ints(s, "shape") != std::vector<int>{e.in, e.out, e.kernel, e.stride}) {
      throw Error(ErrorKind::ShapeMismatch, "descriptor layer " + s.arg + " disagrees with header");
    }
  }
  return a;
}

template <typename Scalar>
std::size_t Params<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor<Scalar>& t : tensors) n += t.size();
  return n;
}

template <typename Scalar>
Eigen::Map<const Mat<Scalar>> Params<Scalar>::weight(std::size_t conv) const {
  const Tensor<Scalar>& t = tensors[2 * conv];
  return {t.data.data(), t.shape[0], t.shape[1] * t.shape[2] * t.shape[3]};
}

template <typename Scalar>
Eigen::Map<const Vec<Scalar>> Params<Scalar>::bias(std::size_t conv) const {
  const Tensor<Scalar>& t = tensors[2 * conv + 1];
  return {t.data.data(), t.shape[0]};
}

template <typename Scalar>
void Params<Scalar>::check() const {
  arch.validate();
  const auto convs = arch.convs();
  if (tensors.size() != 2 * convs.size() || names.size() != tensors.size()) {
    throw Error(ErrorKind::ShapeMismatch, "tensor count does not match architecture");
  }
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto& c = convs[i];
    const Tensor<Scalar>& w = tensors[2 * i];
    const Tensor<Scalar>& b = tensors[2 * i + 1];
    if (w.shape != std::vector<int>{c.out, c.in, c.kernel, c.kernel} || b.shape != std::vector<int>{c.out} ||
        names[2 * i] != c.name + ".weight" || names[2 * i + 1] != c.name + ".bias" ||
        w.size() != static_cast<std::size_t>(c.out * c.in * c.kernel * c.kernel) ||
        b.size() != static_cast<std::size_t>(c.out)) {
      throw Error(ErrorKind::ShapeMismatch, "tensor " + c.name + " disagrees with architecture");
    }
  }
}

template <typename Scalar>
Params<Scalar> init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Params<Scalar> p;
  p.arch = arch;
  for (const auto& c : arch.convs()) {
    const int fan_in = c.in * c.kernel * c.kernel;
    const double bound = std::sqrt(1.0 / fan_in);
    Tensor<Scalar> w{{c.out, c.in, c.kernel, c.kernel}, Vec<Scalar>(c.out * fan_in)};
    for (Eigen::Index i = 0; i < w.data.size(); ++i) w.data[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    Tensor<Scalar> b{{c.out}, Vec<Scalar>(c.out)};
    for (Eigen::Index i = 0; i < b.data.size(); ++i) b.data[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    p.names.push_back(c.name + ".weight");
    p.tensors.push_back(std::move(w));
    p.names.push_back(c.name + ".bias");
    p.tensors.push_back(std::move(b));
  }
  return p;
}

namespace {

constexpr ConvGeometry kDown{3, 2, 1};
constexpr ConvGeometry kSame{3, 1, 1};
constexpr ConvGeometry kPointwise{1, 1, 0};

template <typename Scalar>
void check_input(const Architecture& arch, const FeatureMap<Scalar>& input) {
  if (input.channels() != arch.in_channels || input.width != arch.width || input.height != arch.height) {
    throw Error(ErrorKind::ShapeMismatch, "input does not match architecture");
  }
}

}  // namespace

template <typename Scalar>
Activations<Scalar> forward(const Params<Scalar>& params, const FeatureMap<Scalar>& input) {
  const Architecture& arch = params.arch;
  check_input(arch, input);
  const int L = arch.levels();
  std::size_t conv = 0;

  Activations<Scalar> a;
  a.enc.push_back(input);
  for (int i = 0; i < L; ++i, ++conv) {
    a.enc.push_back(conv2d(a.enc.back(), params.weight(conv), params.bias(conv), kDown));
    relu_inplace(a.enc.back());
  }
  a.mid = conv2d(a.enc.back(), params.weight(conv), params.bias(conv), kSame);
  relu_inplace(a.mid);
  ++conv;

  a.cat.resize(static_cast<std::size_t>(L));
  a.dec.resize(static_cast<std::size_t>(L));
  const FeatureMap<Scalar>* d = &a.mid;
  for (int i = L - 1; i >= 0; --i, ++conv) {
    const auto li = static_cast<std::size_t>(i);
    a.cat[li] = concat(upsample2x(*d), a.enc[li]);
    a.dec[li] = conv2d(a.cat[li], params.weight(conv), params.bias(conv), kSame);
    relu_inplace(a.dec[li]);
    d = &a.dec[li];
  }
  a.prob = conv2d(*d, params.weight(conv), params.bias(conv), kPointwise);
  sigmoid_inplace(a.prob);
  return a;
}

namespace {

template <typename Scalar>
void store(std::vector<Tensor<Scalar>>& grads, std::size_t conv, const ConvGrads<Scalar>& g) {
  grads[2 * conv].data = Eigen::Map<const Vec<Scalar>>(g.weight.data(), g.weight.size());
  grads[2 * conv + 1].data = g.bias;
}

template <typename Scalar>
void check_target(const FeatureMap<Scalar>& prob, const TargetMap& target) {
  if (target.rows() != prob.data.rows() || target.cols() != prob.data.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "target does not match output");
  }
}

}  // namespace

template <typename Scalar>
LossGrad<Scalar> loss_and_gradient(const Params<Scalar>& params, const FeatureMap<Scalar>& input,
                                   const TargetMap& target) {
  const Activations<Scalar> a = forward(params, input);
  check_target(a.prob, target);
  const int L = params.arch.levels();
  const auto n_convs = static_cast<std::size_t>(2 * L + 2);

  LossGrad<Scalar> r;
  r.loss = bce_loss(a.prob.data, target);
  r.grads.resize(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) r.grads[i].shape = params.tensors[i].shape;

  const double n = static_cast<double>(a.prob.data.size());
  FeatureMap<Scalar> dz = a.prob;
  for (Eigen::Index row = 0; row < dz.data.rows(); ++row) {
    for (Eigen::Index col = 0; col < dz.data.cols(); ++col) {
      dz.data(row, col) = bce_logit_grad(a.prob.data(row, col), target(row, col) != 0, n);
    }
  }

  std::size_t conv = n_convs - 1;
  ConvGrads<Scalar> g = conv2d_backward(a.dec[0], params.weight(conv), kPointwise, dz, true);
  store(r.grads, conv, g);
  FeatureMap<Scalar> dd = std::move(g.input);

  std::vector<FeatureMap<Scalar>> dskip(static_cast<std::size_t>(L + 1));
  for (int i = 0; i < L; ++i) {
    const auto li = static_cast<std::size_t>(i);
    --conv;
    relu_backward_inplace(a.dec[li], dd);
    g = conv2d_backward(a.cat[li], params.weight(conv), kSame, dd, true);
    store(r.grads, conv, g);
    const int up_channels = a.cat[li].channels() - a.enc[li].channels();
    dskip[li] = channel_slice(g.input, up_channels, a.enc[li].channels());
    dd = upsample2x_backward(channel_slice(g.input, 0, up_channels));
  }

  --conv;
  relu_backward_inplace(a.mid, dd);
  g = conv2d_backward(a.enc[static_cast<std::size_t>(L)], params.weight(conv), kSame, dd, true);
  store(r.grads, conv, g);
  FeatureMap<Scalar> dx = std::move(g.input);

  for (int i = L - 1; i >= 0; --i) {
    const auto li = static_cast<std::size_t>(i);
    --conv;
    if (i + 1 < L) dx.data += dskip[li + 1].data;
    relu_backward_inplace(a.enc[li + 1], dx);
    g = conv2d_backward(a.enc[li], params.weight(conv), kDown, dx, i > 0);
    store(r.grads, conv, g);
    dx = std::move(g.input);
  }
  return r;
}

template <typename Scalar>
double loss_only(const Params<Scalar>& params, const FeatureMap<Scalar>& input, const TargetMap& target) {
  const Activations<Scalar> a = forward(params, input);
  check_target(a.prob, target);
  return bce_loss(a.prob.data, target);
}

template struct Params<float>;
template struct Params<double>;
template Params<float> init_params<float>(const Architecture&, std::uint64_t);
template Params<double> init_params<double>(const Architecture&, std::uint64_t);
template Activations<float> forward(const Params<float>&, const FeatureMap<float>&);
template Activations<double> forward(const Params<double>&, const FeatureMap<double>&);
template LossGrad<float> loss_and_gradient(const Params<float>&, const FeatureMap<float>&, const TargetMap&);
template LossGrad<double> loss_and_gradient(const Params<double>&, const FeatureMap<double>&, const TargetMap&);
template double loss_only(const Params<float>&, const FeatureMap<float>&, const TargetMap&);
template double loss_only(const Params<double>&, const FeatureMap<double>&, const TargetMap&);

}  // namespace scod::nn
