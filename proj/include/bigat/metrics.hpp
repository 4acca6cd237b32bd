// SPDX-License-Identifier: Apache-2.0
//
// Evaluation quantities: confusion matrix, per-class and averaged scores,
// one-vs-rest FPR and ROC/AUC, and inference timing.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bigat/model.hpp"
#include "bigat/tensor.hpp"

namespace bigat {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t c = 0;
  std::vector<std::size_t> counts;  // row-major c × c

  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * c + p]; }
  std::size_t total() const;
  std::size_t row_sum(std::size_t t) const;
  std::size_t col_sum(std::size_t p) const;
  /// Row-normalized view; an empty row stays all zero.
  std::vector<std::vector<double>> normalized() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws DataError for labels outside [0, c) or mismatched lengths.
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          std::size_t c);

std::vector<int> argmax_rows(const Tensor& probs);

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  std::size_t support = 0;
  // Zero denominators are reported as 0 and flagged here.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool fpr_undefined = false;
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const Averages&, const Averages&) = default;
};

struct ClassReport {
  std::vector<ClassStats> classes;
  double accuracy = 0.0;
  Averages macro;
  Averages weighted;
  double fpr_macro = 0.0;
  double fpr_micro = 0.0;
  std::size_t total = 0;
  friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

/// Throws DataError on an empty matrix.
ClassReport class_report(const ConfusionMatrix& cm);

/// One-vs-rest FPR_i = FP_i / (FP_i + TN_i), averaged over classes.
double fpr_macro(const ConfusionMatrix& cm);
/// Σ FP / Σ (FP + TN).
double fpr_micro(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::size_t class_index = 0;
  /// False when the class (or its complement) is missing from y_true; the
  /// AUC is then undefined.
  bool defined = false;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Binary ROC by threshold sweep; equal scores form a single step.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive);
std::vector<RocCurve> roc_auc_ovr(const std::vector<int>& y_true, const Tensor& probs);
/// Mean AUC over defined curves; nullopt when none is defined.
std::optional<double> macro_auc(const std::vector<RocCurve>& curves);

/// One CSV per class (fpr,tpr,threshold); returns the written paths.
std::vector<std::filesystem::path> write_roc_csv(const std::vector<RocCurve>& curves,
                                                 const std::vector<std::string>& class_names,
                                                 const std::filesystem::path& dir);

struct InferenceTiming {
  double mean_sec_per_instance = 0.0;
  double median_sec_per_instance = 0.0;
  double p95_sec_per_instance = 0.0;
  std::size_t batch_size = 0;
  std::size_t n_instances = 0;
  std::size_t repeats = 0;

  nlohmann::json to_json() const;
};

/// Times eval-mode prediction of `x` with a monotonic clock. Throws
/// ConfigError when repeats is 0 and DataError when x is empty.
InferenceTiming inference_bench(const ModelParams& params, const VariantSpec& spec, const Tensor& x,
                                std::size_t warmup, std::size_t repeats);

/// Deterministic evaluation summary; timing lives in the run report.
struct EvalReport {
  std::vector<std::string> class_names;
  ConfusionMatrix confusion;
  ClassReport report;
  double loss = 0.0;
  std::vector<RocCurve> roc;
  std::optional<double> auc_macro;

  nlohmann::json to_json() const;
};

EvalReport make_eval_report(const Tensor& probs, const std::vector<int>& y_true,
                            const std::vector<std::string>& class_names, double loss);

}  // namespace bigat
