// SPDX-License-Identifier: Apache-2.0
//
// End-to-end workflows behind the command-line tool. Each command takes a
// RunConfig, is reproducible from it, and returns a report that can be
// serialized to JSON.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bigat/checkpoint.hpp"
#include "bigat/data.hpp"
#include "bigat/explain.hpp"
#include "bigat/metrics.hpp"
#include "bigat/model.hpp"
#include "bigat/training.hpp"

namespace bigat {

struct RunConfig {
  // Exactly one source: a CSV path, or the synthetic generator.
  std::string data_path;
  bool use_synth = false;
  SynthConfig synth;

  std::string label_column = "Label";
  std::string normal_class = "Normal";
  double train_frac = 0.8;
  int variant_id = 4;
  std::optional<VariantSpec> custom_variant;
  TrainConfig train;
  std::string out_dir;

  // "test" re-derives the split and scores its test part; "all" scores every row.
  std::string eval_on = "test";

  std::size_t bench_warmup = 2;
  std::size_t bench_repeats = 5;
  AttributionSettings explain;
  /// Attack class for the leave-one-attack-out protocol; empty = every attack.
  std::string holdout;
  /// Variant ids swept by the ablation (default 1..12).
  std::vector<int> ablate_ids;

  /// Flat-key JSON. Unknown keys raise ConfigError.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Throws ConfigError when no or both data sources are set.
  void validate() const;
};

/// Fitted preprocessing kept with a checkpoint.
struct Preprocessing {
  std::optional<Encoding> encoding;  // CSV sources only
  ScalerParams scaler;
  std::vector<std::string> feature_names;
  LabelCodec codec;

  nlohmann::json to_json() const;
  static Preprocessing from_json(const nlohmann::json& j);
};

struct PreparedData {
  Dataset train;
  Dataset test;
  Preprocessing prep;
  CleanReport clean;
};

/// ingest → clean → encode → split → scale (fit on train) → reshape.
/// Errors are wrapped in StageError naming the stage.
PreparedData prepare_data(const RunConfig& cfg);
/// Applies a fitted preprocessing to the configured source.
PreparedData prepare_data(const RunConfig& cfg, const Preprocessing& fitted);

/// Variant from the config (custom spec, or Table-5 id) for the data shape.
VariantSpec resolve_variant(const RunConfig& cfg, std::size_t seq_len, std::size_t n_classes);

struct RunReport {
  nlohmann::json config;
  std::string variant_name;
  History history;
  EvalReport eval;
  std::size_t param_total = 0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  InferenceTiming timing;
  std::vector<std::string> artifacts;

  /// Table-6 columns: Acc, Loss, Pr, Rc, F1, FPR, inference sec/instance.
  nlohmann::json table6() const;
  nlohmann::json to_json() const;
};

struct TrainedModel {
  ModelParams params;
  VariantSpec spec;
  Preprocessing prep;
};

/// Full pipeline; writes checkpoint, report, history and ROC files when
/// out_dir is set.
RunReport cmd_train(const RunConfig& cfg, TrainedModel* model_out = nullptr);

/// Scores a checkpoint on the configured data. IncompatibleError when the
/// data width or classes do not match the checkpoint.
EvalReport cmd_evaluate(const std::filesystem::path& checkpoint, const RunConfig& cfg);

struct AblationCell {
  bool ok = false;
  std::string error;
  double accuracy = 0.0;
  double loss = 0.0;
  double fpr = 0.0;
};

struct AblationRow {
  int id = 0;
  std::string name;
  bool canonical = false;
  std::size_t param_total = 0;
  AblationCell before;  // no balancing
  AblationCell after;   // configured balancing
};

struct AblationReport {
  std::string balancing;
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Trains every variant without and with balancing (RoS when the config
/// asks for none). A failing variant is recorded and the sweep continues.
AblationReport cmd_ablate(const RunConfig& cfg);

struct LoaoReport {
  std::string held_out;
  std::vector<std::string> retained_classes;
  std::size_t train_size = 0;
  std::size_t held_out_in_train = 0;  // always 0; recorded as evidence
  std::size_t held_out_test_size = 0;
  /// Accuracy on test rows of the retained classes.
  double retained_accuracy = 0.0;
  /// Fraction of held-out test rows predicted as any non-normal class.
  double detection_rate = 0.0;
  /// Second reading: all test rows, held-out rows counted correct when flagged as an attack.
  double combined_accuracy = 0.0;
  EvalReport retained_eval;

  nlohmann::json to_json() const;
};

/// Leave-one-attack-out for `cfg.holdout`. ConfigError when it names the
/// normal class or a class absent from the data.
LoaoReport cmd_loao(const RunConfig& cfg);
/// Every attack class in turn.
std::vector<LoaoReport> cmd_loao_sweep(const RunConfig& cfg);

Attribution cmd_explain(const std::filesystem::path& checkpoint, const RunConfig& cfg);
InferenceTiming cmd_bench(const std::filesystem::path& checkpoint, const RunConfig& cfg);
/// Writes the synthetic dataset as CSV (features f0.., label column).
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_csv);
/// Summary table for a variant id or a checkpoint path.
std::string cmd_inspect(const std::string& target, std::size_t seq_len = 83,
                        std::size_t n_classes = 6);

/// Writes pretty JSON, creating parent directories.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace bigat
