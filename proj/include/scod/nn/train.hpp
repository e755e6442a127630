#pragma once

#include "scod/dataset.hpp"
#include "scod/nn/masknet.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace scod::nn {

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  int epochs = 40;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  /// Randomly present a tuple as (obs2, obs1) with swapped masks.
  bool swap_augment = false;
  /// Cosine anneals the rate from learning_rate toward 0 over all batches.
  LrSchedule schedule = LrSchedule::Cosine;

  /// Throws InvalidArgument unless all fields are positive and the
  /// validation fraction lies in (0, 0.5].
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  Params<float> params;          ///< best-validation parameters
  std::vector<EpochLog> log;     ///< one row per epoch, epochs 1..E
  double initial_val_loss = 0.0; ///< validation loss before the first update
  int best_epoch = 0;            ///< 0 when no epoch beat the initial params
};

/// Network input for a batch: channels are obs1 RGB then obs2 RGB in [0, 1].
FeatureMap<float> make_input(std::span<const MaskTuple* const> batch, bool swap = false);
TargetMap make_target(std::span<const MaskTuple* const> batch, bool swap = false);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Seeded shuffle, then the first ceil(fraction * N) tuples form the
/// validation split. Throws EmptyDataset for an empty dataset and
/// InvalidArgument if no training tuple remains.
TrainResult train(const Dataset& data, const Architecture& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(const std::string& dataset_path, const Architecture& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// CSV `epoch,train_loss,val_loss`.
std::string format_training_log(std::span<const EpochLog> log);

/// Architecture matching a dataset's image size with default widths.
Architecture architecture_for(const CameraParams& cam);

}  // namespace scod::nn
