// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bigat/data.hpp"
#include "bigat/model.hpp"

namespace bigat {

enum class LossKind { kCce, kFocal };
enum class Balancing { kNone, kRos, kSmote };

std::string to_string(LossKind k);
std::string to_string(Balancing b);
LossKind loss_from_string(const std::string& s);
Balancing balancing_from_string(const std::string& s);

inline constexpr double kProbClamp = 1e-12;

struct LossResult {
  double loss = 0.0;
  Tensor grad_probs;  // dL/dprobs
};

/// Mean over the batch of −Σ y·log(p), p clamped to [1e-12, 1].
LossResult cce_loss(const Tensor& probs, const Tensor& onehot);

/// Mean over the batch of −α_y (1 − p_y)^γ log(p_y). Empty alpha means all 1.
/// Throws ConfigError for negative gamma.
LossResult focal_loss(const Tensor& probs, const Tensor& onehot, double gamma,
                      const std::vector<double>& alpha = {});

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  std::uint64_t step = 0;
  ModelParams m;
  ModelParams v;

  static AdamState for_params(const ModelParams& params);
};

/// Bias-corrected Adam update in place. Throws ShapeError when gradients and
/// parameters do not line up by name and shape.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  LossKind loss = LossKind::kCce;
  double focal_gamma = 2.0;
  std::vector<double> focal_alpha;
  std::uint64_t seed = 42;
  Balancing balancing = Balancing::kNone;
  /// Global-norm gradient clip; 0 disables.
  double clip_norm = 0.0;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct HistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct History {
  std::vector<HistoryRow> rows;
  std::size_t optimizer_steps = 0;

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
  friend bool operator==(const History&, const History&) = default;
};

struct TrainResult {
  ModelParams params;
  History history;
};

/// Loss of `probs` against integer labels under the configured loss.
double evaluate_loss(const Tensor& probs, const std::vector<int>& labels, const TrainConfig& cfg);

/// Mini-batch training with a seeded per-epoch shuffle; the last partial
/// batch is kept. Parameters are rounded to float precision after every
/// update so the result survives a checkpoint round trip unchanged.
/// Throws EmptyDatasetError, ShapeError, or NumericError naming the epoch
/// and batch when the loss diverges.
TrainResult train(const VariantSpec& spec, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg,
                  const std::function<void(const HistoryRow&)>& on_epoch = {});

}  // namespace bigat
