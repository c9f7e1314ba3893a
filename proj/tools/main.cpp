#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tsr/cli/config.hpp"
#include "tsr/cli/runner.hpp"
#include "tsr/cli/synthetic.hpp"
#include "tsr/cli/trainer.hpp"
#include "tsr/common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"text to 3d shape retrieval workbench"};
  app.require_subcommand(1);

  tsr::SyntheticOptions gen;
  auto* cmd_gen = app.add_subcommand("gen-synthetic", "generate a labeled synthetic dataset");
  cmd_gen->add_option("--seed", gen.seed, "generation seed")->capture_default_str();
  cmd_gen->add_option("--shapes", gen.shape_count, "number of shapes")->required();
  cmd_gen->add_option("--captions-per-shape", gen.captions_per_shape, "captions per shape")
      ->required();
  cmd_gen->add_option("--points", gen.point_count, "points per cloud")->capture_default_str();
  cmd_gen->add_option("--out", gen.out_dir, "output directory")->required();

  std::string config_path, data_dir, out_path, dump_path;
  auto* cmd_train = app.add_subcommand("train", "train a retrieval model");
  cmd_train->add_option("--config", config_path, "experiment config file")->required();
  cmd_train->add_option("--data", data_dir, "dataset directory")->required();
  cmd_train->add_option("--out", out_path, "checkpoint output path")->required();
  cmd_train->add_option("--dump-triplets", dump_path, "write mined triplets to this CSV");

  std::string ckpt, split = "test", query;
  bool as_json = false;
  int k = 5;
  auto* cmd_eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  cmd_eval->add_option("--ckpt", ckpt, "checkpoint path")->required();
  cmd_eval->add_option("--data", data_dir, "dataset directory")->required();
  cmd_eval->add_option("--split", split, "dataset split")->capture_default_str();
  cmd_eval->add_flag("--json", as_json, "emit metrics as JSON");

  auto* cmd_retrieve = app.add_subcommand("retrieve", "rank shapes against a text query");
  cmd_retrieve->add_option("--ckpt", ckpt, "checkpoint path")->required();
  cmd_retrieve->add_option("--data", data_dir, "dataset directory")->required();
  cmd_retrieve->add_option("--split", split, "gallery split")->capture_default_str();
  cmd_retrieve->add_option("--text", query, "query text")->required();
  cmd_retrieve->add_option("--k", k, "results to return")->capture_default_str();

  auto* cmd_inspect = app.add_subcommand("inspect", "describe a checkpoint");
  cmd_inspect->add_option("--ckpt", ckpt, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // fold CLI11's error variety into the usage code
  }

  try {
    if (*cmd_gen) {
      auto summary = tsr::gen_synthetic(gen);
      std::cout << "wrote " << summary.shape_ids.size() << " shapes and " << summary.caption_count
                << " captions to " << gen.out_dir << '\n';
    } else if (*cmd_train) {
      tsr::TrainOptions opt;
      opt.config = tsr::ExperimentConfig::load(config_path);
      opt.data_dir = data_dir;
      opt.out_path = out_path;
      opt.dump_triplets_path = dump_path;
      opt.log = &std::cout;
      auto result = tsr::train_model(opt);
      std::cout << "saved checkpoint " << out_path << " (vocabulary " << result.vocab_size
                << " tokens, " << result.train_count << " training shapes)\n";
    } else if (*cmd_eval) {
      tsr::run_eval(ckpt, data_dir, split, as_json, std::cout);
    } else if (*cmd_retrieve) {
      tsr::run_retrieve(ckpt, data_dir, split, query, k, std::cout, std::cerr);
    } else if (*cmd_inspect) {
      tsr::run_inspect(ckpt, std::cout);
    }
  } catch (const tsr::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const tsr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const tsr::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const tsr::Error& e) {  // data and shape problems
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
