// SPDX-License-Identifier: Apache-2.0
//
// bigat: command-line workbench for training and analysing BiGAT-ID models.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "bigat/error.hpp"
#include "bigat/pipeline.hpp"

namespace {

using nlohmann::json;

// Values set on the command line, keyed like the config file.
struct Overrides {
  json values = json::object();

  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<T>(flag, [this, key](const T& v) { values[key] = v; }, help);
  }
};

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw bigat::FileError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw bigat::ConfigError("config " + path + ": " + e.what());
  }
}

// File, then environment, then flags.
bigat::RunConfig effective_config(const std::string& config_path, const Overrides& o) {
  json j = read_config_file(config_path);
  if (const char* dir = std::getenv("BIGAT_OUT_DIR"); dir && *dir) j["out_dir"] = dir;
  if (const char* seed = std::getenv("BIGAT_SEED"); seed && *seed) {
    try {
      j["seed"] = std::stoull(seed);
    } catch (const std::exception&) {
      throw bigat::ConfigError(std::string("BIGAT_SEED is not an integer: ") + seed);
    }
  }
  j.update(o.values);
  return bigat::RunConfig::from_json(j);
}

void add_data_options(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "--data", "data", "CSV file of flow records");
  app->add_flag_callback("--synth", [&o] { o.values["synth"] = true; }, "Use synthetic data");
  o.add<std::size_t>(app, "--synth-classes", "synth_classes", "Synthetic classes");
  o.add<std::size_t>(app, "--synth-per-class", "synth_per_class", "Synthetic samples per class");
  o.add<std::size_t>(app, "--synth-seq-len", "synth_seq_len", "Synthetic feature count");
  o.add<double>(app, "--synth-separation", "synth_separation", "Prototype separation");
  o.add<std::vector<double>>(app, "--synth-imbalance", "synth_imbalance",
                             "Per-class size multipliers");
  o.add<std::string>(app, "--label", "label", "Label column name");
  o.add<std::string>(app, "--normal-class", "normal_class", "Benign class name");
  o.add<double>(app, "--train-frac", "train_frac", "Training fraction of the stratified split");
  o.add<std::string>(app, "--eval-on", "eval_on", "Rows to score: test or all");
  o.add<std::uint64_t>(app, "--seed", "seed", "Seed for data, split and training");
  o.add<std::string>(app, "--out", "out_dir", "Output directory");
}

void add_train_options(CLI::App* app, Overrides& o) {
  o.add<int>(app, "--variant", "variant", "Ablation variant id (4 = BiGAT-ID)");
  o.add<std::size_t>(app, "--epochs", "epochs", "Training epochs");
  o.add<std::size_t>(app, "--batch-size", "batch_size", "Mini-batch size");
  o.add<double>(app, "--lr", "learning_rate", "Adam learning rate");
  o.add<std::string>(app, "--loss", "loss", "cce or focal");
  o.add<double>(app, "--focal-gamma", "focal_gamma", "Focal loss gamma");
  o.add<std::string>(app, "--balancing", "balancing", "none, ros or smote");
  o.add<double>(app, "--clip-norm", "clip_norm", "Global gradient-norm clip (0 = off)");
  o.add<std::size_t>(app, "--bench-repeats", "bench_repeats", "Timed inference repeats");
  o.add<std::size_t>(app, "--bench-warmup", "bench_warmup", "Untimed warm-up runs");
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiGAT-ID intrusion-detection workbench"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config with flat keys")->check(CLI::ExistingFile);

  Overrides o;
  std::string checkpoint;
  std::string synth_out = "synth.csv";
  std::string inspect_target = "bigat";
  std::size_t inspect_len = 83, inspect_classes = 6;
  bool loao_all = false;

  auto* train = app.add_subcommand("train", "Train, evaluate and save a model");
  add_data_options(train, o);
  add_train_options(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on data");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  add_data_options(evaluate, o);

  auto* ablate = app.add_subcommand("ablate", "Train the twelve variants with and without balancing");
  add_data_options(ablate, o);
  add_train_options(ablate, o);
  o.add<std::vector<int>>(ablate, "--ids", "ablate_ids", "Subset of variant ids");

  auto* loao = app.add_subcommand("loao", "Leave-one-attack-out zero-day protocol");
  add_data_options(loao, o);
  add_train_options(loao, o);
  o.add<std::string>(loao, "--holdout", "holdout", "Attack class to withhold");
  loao->add_flag("--all", loao_all, "Withhold every attack class in turn");

  auto* explain = app.add_subcommand("explain", "Shapley attributions of a checkpoint");
  explain->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  add_data_options(explain, o);
  o.add<std::size_t>(explain, "--samples", "explain_samples", "Instances to explain");
  o.add<std::size_t>(explain, "--permutations", "explain_permutations", "Permutations per instance");
  o.add<std::size_t>(explain, "--top-k", "top_k", "Features listed per class");

  auto* bench = app.add_subcommand("bench", "Time inference of a checkpoint");
  bench->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  add_data_options(bench, o);
  o.add<std::size_t>(bench, "--repeats", "bench_repeats", "Timed repeats");
  o.add<std::size_t>(bench, "--warmup", "bench_warmup", "Warm-up runs");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  add_data_options(synth, o);
  synth->add_option("--csv", synth_out, "Output CSV path");

  auto* inspect = app.add_subcommand("inspect", "Print the layer table of a variant or checkpoint");
  inspect->add_option("target", inspect_target, "bigat, a variant id 1..12, or a checkpoint path");
  inspect->add_option("--seq-len", inspect_len, "Input length");
  inspect->add_option("--classes", inspect_classes, "Number of classes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) {
      std::cout << bigat::cmd_inspect(inspect_target, inspect_len, inspect_classes);
      return 0;
    }
    bigat::RunConfig cfg = effective_config(config_path, o);
    if (synth->parsed()) {
      bigat::cmd_synth(cfg, synth_out);
      std::cout << "wrote " << synth_out << '\n';
      return 0;
    }
    if (train->parsed()) {
      const bigat::RunReport rep = bigat::cmd_train(cfg);
      print({{"variant", rep.variant_name},
             {"param_total", rep.param_total},
             {"table6", rep.table6()},
             {"artifacts", rep.artifacts}});
      return 0;
    }
    if (evaluate->parsed()) {
      const bigat::EvalReport rep = bigat::cmd_evaluate(checkpoint, cfg);
      if (!cfg.out_dir.empty())
        bigat::write_json({{"config", cfg.to_json()}, {"eval", rep.to_json()}},
                          std::filesystem::path(cfg.out_dir) / "eval.json");
      print(rep.to_json());
      return 0;
    }
    if (ablate->parsed()) {
      const bigat::AblationReport rep = bigat::cmd_ablate(cfg);
      bool failed = false;
      for (const auto& r : rep.rows) failed = failed || !r.before.ok || !r.after.ok;
      print(rep.to_json());
      if (failed) std::cerr << "bigat: one or more variants failed; see the report\n";
      return failed ? 1 : 0;
    }
    if (loao->parsed()) {
      json out = json::array();
      if (loao_all) {
        for (const auto& r : bigat::cmd_loao_sweep(cfg)) out.push_back(r.to_json());
      } else {
        out.push_back(bigat::cmd_loao(cfg).to_json());
      }
      for (auto& r : out) r.erase("retained_eval");
      print(out);
      return 0;
    }
    if (explain->parsed()) {
      print(bigat::cmd_explain(checkpoint, cfg).to_json(cfg.explain.top_k));
      return 0;
    }
    if (bench->parsed()) {
      print(bigat::cmd_bench(checkpoint, cfg).to_json());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "bigat: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
