#include "helpers.hpp"

#include "scod/dataset.hpp"
#include "scod/error.hpp"
#include "scod/nn/params_io.hpp"
#include "scod/nn/train.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace scod;
using namespace scod::nn;

namespace {

Dataset small_dataset(int per_class, int size, std::uint64_t seed) {
  const WorldSpec spec = load_world_spec(testing_support::layout_path("studio"));
  GeneratorConfig g;
  g.cam.width = g.cam.height = size;
  Dataset ds;
  ds.cam = g.cam;
  const auto sched = scenario_schedule({per_class, per_class, per_class});
  for (std::size_t i = 0; i < sched.size(); ++i) ds.tuples.push_back(generate_tuple(spec, sched[i], seed, i, 2, g).tuple);
  return ds;
}

}  // namespace

TEST(MakeInput, ChannelsAndSwap) {
  const Dataset ds = small_dataset(1, 16, 3);
  const MaskTuple* t = &ds.tuples[2];
  const FeatureMap<float> x = make_input(std::span(&t, 1));
  ASSERT_EQ(x.channels(), 6);
  EXPECT_FLOAT_EQ(x.at(0, 0, 3, 4), t->obs1(3, 4, 0) / 255.0f);
  EXPECT_FLOAT_EQ(x.at(5, 0, 3, 4), t->obs2(3, 4, 2) / 255.0f);
  const FeatureMap<float> xs = make_input(std::span(&t, 1), true);
  EXPECT_EQ(xs.data.topRows(3), x.data.bottomRows(3));
  const TargetMap y = make_target(std::span(&t, 1)), ys = make_target(std::span(&t, 1), true);
  EXPECT_EQ(y(0, 3 * 16 + 4), t->mask1(3, 4));
  EXPECT_TRUE((ys.row(0) == y.row(1)).all());
}

// Sixteen tuples, 300 epochs: the network has to memorize them.
TEST(Train, OverfitsSixteenTuples) {
  Dataset ds = small_dataset(6, 32, 8);
  ds.tuples.resize(16);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.schedule = LrSchedule::Constant;
  cfg.seed = 4;
  const TrainResult r = train(ds, architecture_for(ds.cam), cfg);
  ASSERT_EQ(r.log.size(), 300u);
  EXPECT_LT(r.log.back().train_loss, 0.02);
}

TEST(Train, DeterministicAndBestSelection) {
  const Dataset ds = small_dataset(4, 16, 9);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.seed = 12;
  const TrainResult a = train(ds, architecture_for(ds.cam), cfg);
  const TrainResult b = train(ds, architecture_for(ds.cam), cfg);
  EXPECT_EQ(encode_params(a.params), encode_params(b.params));
  EXPECT_EQ(format_training_log(a.log), format_training_log(b.log));

  ASSERT_EQ(a.log.size(), 6u);
  for (int e = 0; e < 6; ++e) EXPECT_EQ(a.log[e].epoch, e + 1);
  double best = a.initial_val_loss;
  int best_epoch = 0;
  for (const EpochLog& e : a.log) {
    if (e.val_loss < best) {
      best = e.val_loss;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(a.best_epoch, best_epoch);
  EXPECT_LE(best, a.initial_val_loss);

  cfg.schedule = LrSchedule::Constant;
  EXPECT_FALSE(encode_params(train(ds, architecture_for(ds.cam), cfg).params) == encode_params(a.params));
  cfg.schedule = LrSchedule::Cosine;
  cfg.seed = 13;
  EXPECT_FALSE(encode_params(train(ds, architecture_for(ds.cam), cfg).params) == encode_params(a.params));
}

TEST(Train, ContractErrors) {
  Dataset empty;
  empty.cam.width = empty.cam.height = 16;
  try {
    train(empty, architecture_for(empty.cam), TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
  }
  const Dataset ds = small_dataset(1, 16, 1);
  try {
    train(ds, Architecture{}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(train(ds, architecture_for(ds.cam), bad), Error);
}

TEST(TrainingLog, CsvFormat) {
  const std::vector<EpochLog> log{{1, 0.5, 0.25}, {2, 0.125, 0.0625}};
  EXPECT_EQ(format_training_log(log), "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,0.0625\n");
}
