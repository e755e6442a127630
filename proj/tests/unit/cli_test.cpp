#include "helpers.hpp"

#include "scod/binio.hpp"
#include "scod/cli.hpp"
#include "scod/error.hpp"
#include "scod/image_io.hpp"
#include "scod/nn/params_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace scod;
namespace fs = std::filesystem;

namespace {

RunConfig default_cfg(const std::vector<std::string>& overrides = {}) {
  return load_run_config(testing_support::config_path(), overrides);
}

std::string text_of(const fs::path& p) {
  const auto b = read_file(p.string());
  return std::string(b.begin(), b.end());
}

CommandOptions out_in(const fs::path& dir) {
  CommandOptions o;
  o.out_dir = dir.string();
  return o;
}

}  // namespace

TEST(RunConfig, DefaultsAndResolvedPaths) {
  const RunConfig c = default_cfg();
  EXPECT_TRUE(fs::exists(c.world_path));
  EXPECT_TRUE(fs::path(c.world_path).is_absolute());
  EXPECT_EQ(c.data_counts.total(), 4000);
  EXPECT_EQ(c.train.epochs, 40);
  EXPECT_EQ(c.seq.length, 20);
  EXPECT_EQ(c.seq.dof_set, std::vector<int>{2});
  EXPECT_EQ(c.train.schedule, nn::LrSchedule::Cosine);
  EXPECT_DOUBLE_EQ(c.max_view_distance, 1.2);
  ASSERT_TRUE(c.data_seed && c.train_seed && c.map_seed && c.eval_seed && c.sc_seed);
}

TEST(RunConfig, TextRoundTripAndOverrides) {
  const RunConfig c = default_cfg({"train.epochs=3", "sequence.dof_set=2 3", "thresholds.low=0.05",
                                     "train.lr_schedule=constant"});
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.seq.dof_set, (std::vector<int>{2, 3}));
  EXPECT_DOUBLE_EQ(c.thresholds.low, 0.05);
  EXPECT_EQ(c.train.schedule, nn::LrSchedule::Constant);
  const RunConfig again = parse_run_config(c.to_text(), "/");
  EXPECT_EQ(again.to_text(), c.to_text());
}

TEST(RunConfig, Rejections) {
  const std::string base = "[world]\nspec = " + testing_support::layout_path("studio") + "\n";
  EXPECT_NO_THROW(parse_run_config(base, "/"));
  EXPECT_THROW(parse_run_config(base + "[bogus]\nx = 1\n", "/"), Error);
  EXPECT_THROW(parse_run_config(base + "[train]\nepochz = 1\n", "/"), Error);
  EXPECT_THROW(parse_run_config("[world]\nspec = /nonexistent.world\n", "/"), Error);
  EXPECT_THROW(parse_run_config(base + "[data]\nseed = -4\n", "/"), Error);
  EXPECT_THROW(parse_run_config(base + "[data]\nmax_view_distance = 0.1\n", "/"), Error);
  EXPECT_THROW(parse_run_config(base + "[train]\nlr_schedule = step\n", "/"), Error);
  EXPECT_THROW(parse_run_config(base + "[sequence]\ndof_set = \n", "/"), Error);
  EXPECT_THROW(parse_run_config(base, "/", {"no-dot=1"}), Error);
}

TEST(Commands, RandomizedCommandsNeedASeed) {
  const std::string base = "[world]\nspec = " + testing_support::layout_path("studio") + "\n";
  const RunConfig c = parse_run_config(base, "/");
  const auto dir = testing_support::scratch_dir("noseed");
  std::ostringstream log;
  EXPECT_THROW(cmd_gen_data(c, out_in(dir), log), Error);
  EXPECT_THROW(cmd_map(c, [&] { auto o = out_in(dir); o.oracle = true; return o; }(), log), Error);
}

TEST(Commands, GenDataTrainAndReproducibility) {
  const auto dir = testing_support::scratch_dir("pipeline");
  const RunConfig c =
      default_cfg({"data.no_difference=10", "data.completely_different=10", "data.moved_objects=10",
                   "camera.width=16", "camera.height=16", "train.epochs=2", "train.batch_size=8"});
  std::ostringstream log;
  ASSERT_EQ(cmd_gen_data(c, out_in(dir / "d1"), log), kExitOk);
  ASSERT_EQ(cmd_gen_data(c, out_in(dir / "d2"), log), kExitOk);
  EXPECT_EQ(read_file((dir / "d1/dataset.scds").string()), read_file((dir / "d2/dataset.scds").string()));
  EXPECT_EQ(read_dataset((dir / "d1/dataset.scds").string()).tuples.size(), 30u);
  EXPECT_TRUE(fs::exists(dir / "d1/dataset.scds.manifest"));
  EXPECT_EQ(text_of(dir / "d1/effective.cfg"), c.to_text());

  CommandOptions t = out_in(dir / "t1");
  t.data_path = (dir / "d1/dataset.scds").string();
  ASSERT_EQ(cmd_train(c, t, log), kExitOk);
  t.out_dir = (dir / "t2").string();
  ASSERT_EQ(cmd_train(c, t, log), kExitOk);
  EXPECT_EQ(read_file((dir / "t1/params.scnp").string()), read_file((dir / "t2/params.scnp").string()));
  const std::string csv = text_of(dir / "t1/training_log.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2);  // header + one row per epoch
  EXPECT_EQ(csv, text_of(dir / "t2/training_log.csv"));
}

TEST(Commands, ScRunExportsAndReportsOutcome) {
  const auto dir = testing_support::scratch_dir("scrun");
  const RunConfig c = default_cfg();
  CommandOptions o = out_in(dir);
  o.oracle = true;
  std::ostringstream log;
  ASSERT_EQ(cmd_sc_run(c, o, log), kExitOk);
  for (const char* f : {"obs1.ppm", "obs2.ppm", "mask1.pgm", "mask2.pgm", "effective.cfg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(decode_ppm(read_file((dir / "obs1.ppm").string())).width(), 64);
  EXPECT_NE(log.str().find("predictor oracle: Identical"), std::string::npos) << log.str();
  EXPECT_NE(log.str().find("simulator: Identical"), std::string::npos);

  CommandOptions missing = out_in(dir / "missing");
  missing.params_path = (dir / "nope.scnp").string();
  try {
    cmd_sc_run(c, missing, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Commands, MapOutputsMatchGrid) {
  const auto dir = testing_support::scratch_dir("map");
  const RunConfig c = default_cfg({"map.resolution=0.5", "map.trials_per_cell=2"});
  CommandOptions o = out_in(dir);
  o.oracle = true;
  std::ostringstream log;
  ASSERT_EQ(cmd_map(c, o, log), kExitOk);
  const Image<std::uint8_t> pgm = decode_pgm(read_file((dir / "map.pgm").string()));
  EXPECT_EQ(pgm.cols(), 16);  // 8 m / 0.5
  EXPECT_EQ(pgm.rows(), 12);  // 6 m / 0.5
  EXPECT_TRUE((pgm == 0).any());
  const std::string csv = text_of(dir / "map.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16 * 12 + 1);
  EXPECT_NE(log.str().find("region free"), std::string::npos);
}

TEST(Commands, EvalOracleStrictPasses) {
  const auto dir = testing_support::scratch_dir("eval");
  CommandOptions o = out_in(dir);
  o.oracle = true;
  o.strict = true;
  std::ostringstream log;
  EXPECT_EQ(cmd_eval(default_cfg(), o, log), kExitOk);
  const std::string csv = text_of(dir / "report.csv");
  EXPECT_NE(csv.find("in-distribution,oracle"), std::string::npos);
  EXPECT_NE(csv.find("generalization,oracle"), std::string::npos);
  EXPECT_NE(csv.find("in-distribution,naive"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
}

TEST(Commands, EvalStrictFailsForAnUntrainedModel) {
  const auto dir = testing_support::scratch_dir("eval_untrained");
  const RunConfig c = default_cfg();
  nn::save_params((dir / "init.scnp").string(), nn::init_params<float>(nn::architecture_for(c.cam), 1));
  CommandOptions o = out_in(dir / "out");
  o.params_path = (dir / "init.scnp").string();
  o.strict = true;
  std::ostringstream log;
  EXPECT_EQ(cmd_eval(c, o, log), kExitAcceptance);
  o.strict = false;
  EXPECT_EQ(cmd_eval(c, o, log), kExitOk);
}

TEST(QualityChecks, ThresholdsAreInclusive) {
  EvalReport in, gen, naive;
  in.mean_iou = 0.80;
  in.classes[0] = {19, 19};   // identical 1.0
  in.classes[1] = {10, 9};    // different 0.9
  gen.mean_iou = 0.65;
  gen.classes[0] = {20, 17};  // 0.85
  gen.classes[1] = {20, 17};
  naive.mean_iou = 0.65;
  const auto checks = learned_quality_checks(in, gen, naive);
  ASSERT_EQ(checks.size(), 3u);
  for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  in.mean_iou = 1.0;  // 1.0 - 0.8 rounds below 0.2, 1.0 - 0.79 does not
  gen.mean_iou = 0.8;
  EXPECT_TRUE(learned_quality_checks(in, gen, naive)[1].pass);
  gen.mean_iou = 0.79;
  EXPECT_FALSE(learned_quality_checks(in, gen, naive)[1].pass);
  gen.classes[0] = {20, 16};
  gen.mean_iou = 0.9;
  EXPECT_FALSE(learned_quality_checks(in, gen, naive)[1].pass);
}
