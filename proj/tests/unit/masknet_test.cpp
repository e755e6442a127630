#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"

#include "scod/error.hpp"
#include "scod/nn/layers.hpp"
#include "scod/nn/masknet.hpp"
#include "scod/nn/params_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace scod;
using namespace scod::nn;

namespace {

Architecture tiny_arch() {
  Architecture a;
  a.width = a.height = 8;
  a.encoder = {3};
  a.head_width = 3;
  return a;
}

}  // namespace

TEST(Conv, OneByOneIdentity) {
  std::mt19937_64 rng(1);
  const FeatureMap<double> x = oracle::random_map(rng, 3, 2, 5, 4);
  const Mat<double> w = Mat<double>::Identity(3, 3);
  const FeatureMap<double> y = conv2d<double>(x, w, Vec<double>::Zero(3), ConvGeometry{1, 1, 0});
  EXPECT_EQ(y.data, x.data);
}

TEST(Conv, AllOnesOnConstantInterior) {
  FeatureMap<double> x(1, 1, 5, 5);
  x.data.setConstant(2.5);
  const FeatureMap<double> y = conv2d<double>(x, Mat<double>::Ones(1, 9), Vec<double>::Zero(1), ConvGeometry{});
  EXPECT_DOUBLE_EQ(y.at(0, 0, 2, 2), 9 * 2.5);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 4 * 2.5);  // corner sees 4 taps
}

TEST(Conv, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (const auto [k, stride, pad, size] :
       std::vector<std::array<int, 4>>{{3, 1, 1, 8}, {3, 2, 1, 8}, {3, 2, 1, 7}, {1, 1, 0, 6}, {3, 1, 0, 9}}) {
    const FeatureMap<double> x = oracle::random_map(rng, 2, 3, size, size);
    const FeatureMap<double> wm = oracle::random_map(rng, 4, 1, 1, 2 * k * k);
    const Mat<double> w = Eigen::Map<const Mat<double>>(wm.data.data(), 4, 2 * k * k);
    const Vec<double> b = Vec<double>::Random(4);
    const FeatureMap<double> y = conv2d<double>(x, w, b, ConvGeometry{k, stride, pad});
    const FeatureMap<double> ref = oracle::conv(x, w, b, k, stride, pad);
    ASSERT_EQ(y.data.rows(), ref.data.rows());
    ASSERT_EQ(y.data.cols(), ref.data.cols());
    const double rel = (y.data - ref.data).cwiseAbs().maxCoeff() / ref.data.cwiseAbs().maxCoeff();
    EXPECT_LT(rel, 1e-12) << "k=" << k << " stride=" << stride;
  }
}

TEST(Conv, FloatMatchesDoubleOracle) {
  std::mt19937_64 rng(3);
  const FeatureMap<double> x = oracle::random_map(rng, 2, 1, 8, 8);
  const FeatureMap<double> wm = oracle::random_map(rng, 4, 1, 1, 18);
  const Mat<double> w = Eigen::Map<const Mat<double>>(wm.data.data(), 4, 18);
  const Vec<double> b = Vec<double>::Random(4);
  FeatureMap<float> xf(2, 1, 8, 8);
  xf.data = x.data.cast<float>();
  const FeatureMap<float> y = conv2d<float>(xf, w.cast<float>(), b.cast<float>(), ConvGeometry{});
  const FeatureMap<double> ref = oracle::conv(x, w, b, 3, 1, 1);
  EXPECT_LT((y.data.cast<double>() - ref.data).cwiseAbs().maxCoeff() / ref.data.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Conv, ShapeMismatchThrows) {
  FeatureMap<double> x(3, 1, 4, 4);
  EXPECT_THROW(conv2d<double>(x, Mat<double>::Zero(2, 18), Vec<double>::Zero(2), ConvGeometry{}), Error);
}

TEST(Bce, ClampedPerfectPredictionAndHalf) {
  Eigen::ArrayXXd p(2, 3);
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> t(2, 3);
  t << 1, 0, 1, 0, 0, 1;
  p = t.cast<double>();
  EXPECT_LE(bce_loss(p, t), 1e-6 * std::abs(std::log(kProbEpsilon)));
  p.setConstant(0.5);
  EXPECT_NEAR(bce_loss(p, t), std::log(2.0), 1e-9);
}

TEST(Bce, MatchesSummationOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::ArrayXXd p(8, 8);
    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> t(8, 8);
    std::vector<double> pv;
    std::vector<int> tv;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        p(r, c) = u(rng);
        t(r, c) = u(rng) < 0.5;
        pv.push_back(p(r, c));
        tv.push_back(t(r, c));
      }
    EXPECT_NEAR(bce_loss(p, t), oracle::bce(pv, tv), 1e-9);
  }
}

TEST(Bce, ShapeMismatchThrows) {
  EXPECT_THROW(bce_loss(Eigen::ArrayXXd::Zero(2, 2), Eigen::ArrayXXd::Zero(2, 3)), Error);
}

TEST(Gradient, EveryLayerTypeMatchesFiniteDifferences) {
  for (const auto& c : oracle::layer_gradient_checks()) {
    EXPECT_LE(c.result.worst, 1e-4) << c.name;
    EXPECT_GT(c.result.checked, 0) << c.name;
  }
}

// Two convolution stages plus the head at 8x8, h = 1e-4, every parameter.
TEST(Gradient, TinyNetworkMatchesFiniteDifferences) {
  const Architecture arch = tiny_arch();
  const Params<double> params = init_params<double>(arch, 21);
  std::mt19937_64 rng(5);
  const FeatureMap<double> x = oracle::random_map(rng, 6, 2, 8, 8, 0.0, 1.0);
  TargetMap t(2, x.data.cols());
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng() % 3 == 0;
  const oracle::GradCheck r = oracle::network_gradient(params, x, t, 1e-4);
  EXPECT_LE(r.worst, 1e-4);
  EXPECT_EQ(r.checked + r.skipped, static_cast<int>(params.parameter_count()));
  EXPECT_GT(r.checked, 0.9 * params.parameter_count());
}

TEST(Gradient, ZeroSignalWhenTargetsMatchClampedPrediction) {
  const Architecture arch = tiny_arch();
  Params<double> params = init_params<double>(arch, 1);
  // Drive the head bias far negative so every probability clamps to eps.
  params.tensors.back().data.setConstant(-40.0);
  std::mt19937_64 rng(6);
  const FeatureMap<double> x = oracle::random_map(rng, 6, 2, 8, 8, 0.0, 1.0);
  const TargetMap t = TargetMap::Zero(2, x.data.cols());
  double norm2 = 0.0;
  for (const auto& g : loss_and_gradient(params, x, t).grads) norm2 += g.data.squaredNorm();
  EXPECT_LE(std::sqrt(norm2), 1e-5);
}

TEST(Gradient, FiniteForSaturatedTargets) {
  const Architecture arch = tiny_arch();
  const Params<float> params = init_params<float>(arch, 2);
  std::mt19937_64 rng(7);
  FeatureMap<float> x(6, 4, 8, 8);
  x.data = oracle::random_map(rng, 6, 4, 8, 8, 0.0, 1.0).data.cast<float>();
  for (const std::uint8_t v : {0, 1}) {
    const TargetMap t = TargetMap::Constant(2, x.data.cols(), v);
    const auto lg = loss_and_gradient(params, x, t);
    EXPECT_TRUE(std::isfinite(lg.loss));
    for (const auto& g : lg.grads) EXPECT_TRUE(g.data.allFinite());
  }
}

TEST(Forward, RangeShapeAndDeterminism) {
  const Architecture arch;
  const Params<float> params = init_params<float>(arch, 3);
  std::mt19937_64 rng(8);
  FeatureMap<float> x(6, 2, 64, 64);
  x.data = oracle::random_map(rng, 6, 2, 64, 64, 0.0, 1.0).data.cast<float>();
  const auto a = forward(params, x);
  EXPECT_EQ(a.prob.channels(), 2);
  EXPECT_EQ(a.prob.height, 64);
  EXPECT_TRUE((a.prob.data.array() > 0.0f).all() && (a.prob.data.array() < 1.0f).all());
  EXPECT_EQ(forward(params, x).prob.data, a.prob.data);
}

TEST(Architecture, DefaultParameterCountAndDescriptor) {
  const Architecture arch;
  // enc 6-16, 16-32, 32-64; mid 64-64; dec 96-32, 48-16, 22-16; head 16-2.
  const std::size_t expected = (6 * 9 + 1) * 16 + (16 * 9 + 1) * 32 + (32 * 9 + 1) * 64 + (64 * 9 + 1) * 64 +
                               (96 * 9 + 1) * 32 + (48 * 9 + 1) * 16 + (22 * 9 + 1) * 16 + (16 + 1) * 2;
  EXPECT_EQ(arch.parameter_count(), expected);
  EXPECT_EQ(init_params<float>(arch, 1).parameter_count(), expected);
  EXPECT_EQ(Architecture::parse(arch.to_text()), arch);
}

// Weights and biases of every conv are within +-sqrt(1/fan_in).
TEST(Init, UniformFanInBounds) {
  const Architecture arch;
  const Params<double> p = init_params<double>(arch, 4);
  const auto convs = arch.convs();
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const double bound = std::sqrt(1.0 / (convs[i].in * convs[i].kernel * convs[i].kernel));
    EXPECT_LE(p.weight(i).cwiseAbs().maxCoeff(), bound);
    EXPECT_LE(p.bias(i).cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(init_params<double>(arch, 4), p);
  EXPECT_FALSE(init_params<double>(arch, 5) == p);
}

TEST(ParamsIo, RoundTripAndCorruption) {
  const Params<float> p = init_params<float>(Architecture{}, 9);
  const auto bytes = encode_params(p);
  EXPECT_EQ(decode_params(bytes), p);

  auto bad_magic = bytes;
  bad_magic[1] ^= 0xff;
  try {
    decode_params(bad_magic);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(decode_params(truncated), Error);

  // Tensor dims permuted (same element count) so they no longer agree with
  // the descriptor.
  auto conflict = bytes;
  const std::string text(conflict.begin(), conflict.end());
  const auto at = text.find("enc0.weight");
  ASSERT_NE(at, std::string::npos);
  const std::size_t dims = at + std::string("enc0.weight").size() + 4;
  ASSERT_EQ(conflict[dims + 4], 6);
  conflict[dims + 4] = 3;
  conflict[dims + 8] = 6;
  try {
    decode_params(conflict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}
