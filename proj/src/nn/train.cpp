#include "scod/nn/train.hpp"

#include "scod/error.hpp"
#include "scod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace scod::nn {

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0 || !(learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "epochs, batch size and learning rate must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
    throw Error(ErrorKind::InvalidArgument, "validation fraction must lie in (0, 0.5]");
  }
}

FeatureMap<float> make_input(std::span<const MaskTuple* const> batch, bool swap) {
  if (batch.empty()) throw Error(ErrorKind::EmptyDataset, "empty batch");
  const int W = batch[0]->obs1.width(), H = batch[0]->obs1.height();
  FeatureMap<float> in(6, static_cast<int>(batch.size()), H, W);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const MaskTuple& t = *batch[b];
    if (t.obs1.width() != W || t.obs1.height() != H || t.obs2.width() != W || t.obs2.height() != H) {
      throw Error(ErrorKind::ShapeMismatch, "batch images differ in size");
    }
    const RgbImage& first = swap ? t.obs2 : t.obs1;
    const RgbImage& second = swap ? t.obs1 : t.obs2;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          in.at(ch, static_cast<int>(b), y, x) = first(y, x, ch) / 255.0f;
          in.at(3 + ch, static_cast<int>(b), y, x) = second(y, x, ch) / 255.0f;
        }
      }
    }
  }
  return in;
}

TargetMap make_target(std::span<const MaskTuple* const> batch, bool swap) {
  if (batch.empty()) throw Error(ErrorKind::EmptyDataset, "empty batch");
  const auto H = batch[0]->mask1.rows(), W = batch[0]->mask1.cols();
  TargetMap t(2, static_cast<Eigen::Index>(batch.size()) * H * W);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Mask& m1 = swap ? batch[b]->mask2 : batch[b]->mask1;
    const Mask& m2 = swap ? batch[b]->mask1 : batch[b]->mask2;
    if (m1.rows() != H || m1.cols() != W || m2.rows() != H || m2.cols() != W) {
      throw Error(ErrorKind::ShapeMismatch, "batch masks differ in size");
    }
    const auto off = static_cast<Eigen::Index>(b) * H * W;
    t.row(0).segment(off, H * W) = Eigen::Map<const Eigen::Array<std::uint8_t, 1, Eigen::Dynamic>>(m1.data(), H * W);
    t.row(1).segment(off, H * W) = Eigen::Map<const Eigen::Array<std::uint8_t, 1, Eigen::Dynamic>>(m2.data(), H * W);
  }
  return t;
}

Architecture architecture_for(const CameraParams& cam) {
  Architecture a;
  a.width = cam.width;
  a.height = cam.height;
  return a;
}

namespace {

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<Vec<float>> m, v;

  explicit Adam(double lr_, const Params<float>& p) : lr(lr_) {
    for (const auto& tensor : p.tensors) {
      m.push_back(Vec<float>::Zero(tensor.data.size()));
      v.push_back(Vec<float>::Zero(tensor.data.size()));
    }
  }

  void step(Params<float>& p, const std::vector<Tensor<float>>& grads) {
    ++t;
    const float b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2);
    const float c1 = static_cast<float>(1.0 - std::pow(beta1, static_cast<double>(t)));
    const float c2 = static_cast<float>(1.0 - std::pow(beta2, static_cast<double>(t)));
    const float step = static_cast<float>(lr), e = static_cast<float>(eps);
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      const auto g = grads[i].data.array();
      m[i].array() = b1 * m[i].array() + (1.0f - b1) * g;
      v[i].array() = b2 * v[i].array() + (1.0f - b2) * g.square();
      p.tensors[i].data.array() -= step * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + e);
    }
  }
};

std::vector<const MaskTuple*> gather(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<const MaskTuple*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&data.tuples[i]);
  return out;
}

/// Mean loss over a split, evaluated in chunks; weighted by element count.
double split_loss(const Params<float>& p, const Dataset& data, std::span<const std::size_t> idx, int chunk) {
  double sum = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(chunk)) {
    const auto batch = gather(data, idx.subspan(start, std::min<std::size_t>(chunk, idx.size() - start)));
    sum += loss_only(p, make_input(batch), make_target(batch)) * static_cast<double>(batch.size());
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const Dataset& data, const Architecture& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.tuples.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no tuples");
  if (arch.width != data.cam.width || arch.height != data.cam.height) {
    throw Error(ErrorKind::ShapeMismatch, "architecture input size differs from dataset images");
  }
  const std::size_t n = data.tuples.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) throw Error(ErrorKind::InvalidArgument, "no tuples left for training");

  Rng rng(derive_seed(cfg.seed, 0));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  const std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  TrainResult result;
  Params<float> params = init_params<float>(arch, derive_seed(cfg.seed, 1));
  Adam adam(cfg.learning_rate, params);
  result.initial_val_loss = split_loss(params, data, val, cfg.batch_size);
  result.params = params;
  double best = result.initial_val_loss;

  const std::size_t per_epoch = (train_idx.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                static_cast<std::size_t>(cfg.batch_size);
  const double total_steps = static_cast<double>(per_epoch) * cfg.epochs;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(train_idx.begin(), train_idx.end());
    double sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, train_idx.size() - start);
      const auto batch = gather(data, std::span(train_idx).subspan(start, count));
      const bool swap = cfg.swap_augment && rng.coin();
      if (cfg.schedule == LrSchedule::Cosine) {
        adam.lr = cfg.learning_rate * 0.5 * (1.0 + std::cos(kPi * static_cast<double>(adam.t) / total_steps));
      }
      const LossGrad<float> lg = loss_and_gradient(params, make_input(batch, swap), make_target(batch, swap));
      sum += lg.loss * static_cast<double>(count);
      adam.step(params, lg.grads);
    }
    EpochLog row{epoch, sum / static_cast<double>(train_idx.size()), split_loss(params, data, val, cfg.batch_size)};
    result.log.push_back(row);
    if (row.val_loss < best) {
      best = row.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (on_epoch) on_epoch(row);
  }
  return result;
}

TrainResult train(const std::string& dataset_path, const Architecture& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  return train(read_dataset(dataset_path), arch, cfg, on_epoch);
}

std::string format_training_log(std::span<const EpochLog> log) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,train_loss,val_loss\n";
  for (const EpochLog& r : log) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
  return out.str();
}

}  // namespace scod::nn
