// SPDX-License-Identifier: Apache-2.0
//
// Flow-record ingestion and preprocessing: CSV loading, cleaning, encoding,
// min-max scaling, sequence reshaping, stratified splitting, class balancing
// and a synthetic desk-scale generator.
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bigat/rng.hpp"
#include "bigat/tensor.hpp"

namespace bigat {

enum class ColumnKind { kNumeric, kCategorical };

struct RawTable {
  std::vector<std::string> columns;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<std::string>> rows;
  std::string label_column;

  std::size_t label_index() const;
  std::size_t n_rows() const { return rows.size(); }
};

/// Class names in lexicographic order; index i ↔ classes[i].
class LabelCodec {
 public:
  LabelCodec() = default;
  /// Sorted unique names.
  static LabelCodec fit(const std::vector<std::string>& names);
  explicit LabelCodec(std::vector<std::string> sorted_classes);

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::string& name(std::size_t i) const { return classes_.at(i); }
  /// Throws UnknownClassError for names outside the codec.
  int index(const std::string& name) const;
  std::optional<int> find(const std::string& name) const;

  friend bool operator==(const LabelCodec&, const LabelCodec&) = default;

 private:
  std::vector<std::string> classes_;
};

/// Model-ready samples: x is [n × T × 1], y in [0, codec.size()).
struct Dataset {
  Tensor x;
  std::vector<int> y;
  LabelCodec codec;
  std::vector<std::string> feature_names;

  std::size_t size() const { return y.size(); }
  std::size_t seq_len() const { return x.rank() == 3 ? x.dim(1) : 0; }
  std::size_t n_classes() const { return codec.size(); }
  std::vector<std::size_t> class_counts() const;
  /// Rows in the given order.
  Dataset subset(const std::vector<std::size_t>& indices) const;
  /// Row i as a flat feature vector.
  std::vector<double> row(std::size_t i) const;
};

// ---------------------------------------------------------------------------
// Ingestion

/// RFC-4180 style CSV with a header row. Throws FileError, RaggedRowError
/// (carrying the 1-based line number) or MissingColumnError.
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column = "Label");
RawTable parse_csv(std::istream& in, const std::string& label_column = "Label");
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct CleanReport {
  std::size_t dropped_nonfinite = 0;
  std::size_t dropped_empty_label = 0;
  std::size_t dropped_duplicates = 0;
};

/// Drops rows with non-finite or empty numeric cells or an empty label, then
/// exact duplicates (first occurrence kept). Throws EmptyDatasetError when no
/// row survives.
RawTable clean(const RawTable& table, CleanReport* report = nullptr);

/// Fitted encoding of a table: categorical value codes and the label codec.
struct Encoding {
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> feature_kinds;
  /// Per feature: sorted category values (empty for numeric columns).
  std::vector<std::vector<std::string>> categories;
  LabelCodec codec;

  nlohmann::json to_json() const;
  static Encoding from_json(const nlohmann::json& j);
};

struct EncodedTable {
  Tensor features;  // [n × T]
  std::vector<int> labels;
  Encoding encoding;
};

/// Fits category codes and the label codec (lexicographic) and encodes.
EncodedTable encode(const RawTable& table);
/// Applies a fitted encoding. Unseen labels throw UnknownClassError; unseen
/// category values get code = number of known values.
EncodedTable encode(const RawTable& table, const Encoding& fitted);

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& j);
};

/// Per-feature min/max of a [n × T] matrix (or [n × T × 1] dataset tensor).
ScalerParams fit_scaler(const Tensor& train_features);
/// Maps to [0, 1] with clamping; constant features map to 0.
Tensor apply_scaler(const ScalerParams& p, const Tensor& features);

/// [n × T] → [n × T × 1]; feature order becomes the time axis.
Tensor to_sequences(const Tensor& features);

/// Per-class shuffled split; each class contributes round(frac·count) rows
/// to the training part. Throws StratificationError if a class has fewer
/// than 2 samples, ConfigError unless 0 < frac < 1.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_frac, Rng& rng);

/// [n × c] indicator matrix. Throws DataError for labels outside [0, c).
Tensor one_hot(const std::vector<int>& labels, std::size_t c);

/// Upsamples every class with replacement to the majority count. Originals
/// come first, then the additions. Throws DataError for an empty class.
Dataset ros_balance(const Dataset& ds, Rng& rng);

struct SmoteOptions {
  std::size_t k = 5;
  /// Test hook: fixes the interpolation weight instead of drawing U[0, 1].
  std::optional<double> fixed_lambda;
};

struct SmoteReport {
  std::vector<std::string> warnings;
};

/// SMOTE interpolation toward one of the k nearest same-class neighbours
/// (Euclidean on the flattened row). Singleton classes fall back to random
/// duplication with a warning.
Dataset smote_balance(const Dataset& ds, Rng& rng, const SmoteOptions& options = {},
                      SmoteReport* report = nullptr);

struct SynthConfig {
  std::size_t n_classes = 6;
  std::size_t n_per_class = 400;
  std::size_t seq_len = 20;
  double separation = 3.0;
  /// Per-class size multipliers (1 = n_per_class); missing entries are 1.
  std::vector<double> imbalance;
  /// Name of class 0's benign traffic; the remaining classes are attacks.
  std::string normal_name = "Normal";
};

/// Class-conditional Gaussians around ±1 prototypes scaled by `separation`,
/// unit noise. Feature values are raw (unscaled).
Dataset synth_generate(const SynthConfig& config, Rng& rng);

/// Feature names f0..f{T-1}.
std::vector<std::string> default_feature_names(std::size_t n);

}  // namespace bigat
