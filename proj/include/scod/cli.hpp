#pragma once

#include "scod/dataset.hpp"
#include "scod/eval.hpp"
#include "scod/nn/train.hpp"
#include "scod/scod.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace scod {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitAcceptance = 3;

/// Everything a subcommand needs; parsed from a sectioned key-value file.
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
  std::string world_path;
  std::string gen_world_path;
  CameraParams cam;
  SequenceConfig seq;
  OutcomeThresholds thresholds;

  ScenarioCounts data_counts{1334, 1333, 1333};
  int k_max = 2;
  double max_view_distance = 1.2;
  std::optional<std::uint64_t> data_seed;

  nn::TrainConfig train;
  std::optional<std::uint64_t> train_seed;
  std::string dataset_path;

  double map_resolution = 0.25;
  int map_trials = 40;
  double map_heading = 0.0;
  std::optional<std::uint64_t> map_seed;

  std::optional<std::uint64_t> eval_seed;
  std::optional<std::uint64_t> sc_seed;
  std::string params_path;

  /// Canonical text form; parse(format(c)) reproduces c.
  std::string to_text() const;
};

/// `overrides` are `section.key=value` strings applied before validation.
RunConfig parse_run_config(std::string_view text, const std::string& base_dir,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Flags shared by the subcommands; unset optionals fall back to the config.
struct CommandOptions {
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::string data_path;
  std::string params_path;
  bool oracle = false;
  std::optional<std::array<double, 3>> start;  ///< x y heading
  std::string region = "free";
};

// Each command returns an exit code and writes human-readable progress to
// `log`. Library errors propagate as scod::Error.
int cmd_gen_data(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_train(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_sc_run(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_map(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_eval(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);

struct AcceptanceCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Learned-predictor targets on the in-distribution set, the generalization
/// trend, and the margin over the naive baseline.
std::vector<AcceptanceCheck> learned_quality_checks(const EvalReport& learned_in, const EvalReport& learned_gen,
                                                    const EvalReport& naive_in);

}  // namespace scod
