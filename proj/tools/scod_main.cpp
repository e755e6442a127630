// Command-line entry point: gen-data, train, sc-run, map, eval.

#include "scod/cli.hpp"
#include "scod/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates the same large buffers every step; keep them in the
  // heap instead of returning them to the kernel each time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  CLI::App app{"Sensory commutativity object discovery"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  scod::CommandOptions opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "seed, overrides the config");
    sub->add_option("--out", opt.out_dir, "output directory")->required();
    sub->add_option("--set", overrides, "override a config key, section.key=value");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a training dataset");
  common(gen);
  CLI::App* train = app.add_subcommand("train", "train the mask predictor");
  common(train);
  train->add_option("--data", opt.data_path, "dataset file");
  CLI::App* sc = app.add_subcommand("sc-run", "run one SC-experiment and classify it");
  common(sc);
  sc->add_option("--params", opt.params_path, "trained params file");
  sc->add_flag("--oracle", opt.oracle, "use ground-truth masks instead of a network");
  std::vector<double> start;
  sc->add_option("--start", start, "start pose: x y heading")->expected(3);
  sc->add_option("--region", opt.region, "sample the start pose in this region");
  CLI::App* map = app.add_subcommand("map", "commutation-probability map");
  common(map);
  map->add_option("--params", opt.params_path, "trained params file");
  map->add_flag("--oracle", opt.oracle, "use ground-truth masks instead of a network");
  CLI::App* eval = app.add_subcommand("eval", "score a predictor on both test sets");
  common(eval);
  eval->add_option("--params", opt.params_path, "trained params file");
  eval->add_flag("--oracle", opt.oracle, "use ground-truth masks instead of a network");
  eval->add_flag("--strict", opt.strict, "exit 3 if the acceptance targets are not met");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? scod::kExitOk : scod::kExitUsage;
  }

  try {
    for (CLI::App* sub : {gen, train, sc, map, eval}) {
      if (sub->parsed() && sub->count("--seed") > 0) opt.seed = seed;
    }
    if (start.size() == 3) opt.start = std::array<double, 3>{start[0], start[1], start[2]};
    const scod::RunConfig cfg = scod::load_run_config(config_path, overrides);
    if (gen->parsed()) return scod::cmd_gen_data(cfg, opt, std::cout);
    if (train->parsed()) return scod::cmd_train(cfg, opt, std::cout);
    if (sc->parsed()) return scod::cmd_sc_run(cfg, opt, std::cout);
    if (map->parsed()) return scod::cmd_map(cfg, opt, std::cout);
    if (eval->parsed()) return scod::cmd_eval(cfg, opt, std::cout);
  } catch (const scod::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return scod::kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return scod::kExitData;
  }
  return scod::kExitUsage;
}
