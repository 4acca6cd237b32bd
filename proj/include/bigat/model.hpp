// SPDX-License-Identifier: Apache-2.0
//
// Declarative network variants, parameter construction, and the forward /
// backward passes of the assembled dual-branch model.
//
// A VariantSpec lists one or two branch pipelines that all read the raw
// [b × T × 1] input. Each branch ends in a rank-2 tensor (a Flatten is
// inserted after any rank-3 tail); branch outputs are concatenated and fed to
// the dense head (ReLU widths, then a softmax layer of n_classes).
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bigat/layers.hpp"
#include "bigat/rng.hpp"
#include "bigat/tensor.hpp"

namespace bigat {

enum class BlockKind { kBiGru, kLstmLast, kLstmSeq, kMha, kLayerNorm, kDropout, kProject };

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& s);

/// One block of a branch pipeline. Only the fields of its kind are set.
struct BlockSpec {
  BlockKind kind = BlockKind::kDropout;
  std::size_t units = 0;    // BiGRU / LSTM units, Project width
  std::size_t heads = 0;    // MHA
  std::size_t key_dim = 0;  // MHA
  double rate = 0.0;        // Dropout

  static BlockSpec bigru(std::size_t units) { return {BlockKind::kBiGru, units, 0, 0, 0.0}; }
  static BlockSpec lstm_last(std::size_t units) {
    return {BlockKind::kLstmLast, units, 0, 0, 0.0};
  }
  static BlockSpec lstm_seq(std::size_t units) { return {BlockKind::kLstmSeq, units, 0, 0, 0.0}; }
  static BlockSpec mha(std::size_t heads, std::size_t key_dim) {
    return {BlockKind::kMha, 0, heads, key_dim, 0.0};
  }
  static BlockSpec layer_norm() { return {BlockKind::kLayerNorm, 0, 0, 0, 0.0}; }
  static BlockSpec dropout(double rate) { return {BlockKind::kDropout, 0, 0, 0, rate}; }
  static BlockSpec project(std::size_t width) { return {BlockKind::kProject, width, 0, 0, 0.0}; }

  std::string label() const;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct VariantSpec {
  std::string name;
  std::size_t seq_len = 0;
  std::size_t n_classes = 0;
  std::vector<std::vector<BlockSpec>> branches;
  std::vector<std::size_t> head_widths{64, 32};
  double dropout_rate = 0.5;
  double layer_norm_eps = kLayerNormEps;
  double lstm_forget_bias = 0.0;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

/// Knobs of the canonical architecture; defaults reproduce the published one.
struct BigatOptions {
  std::size_t gru_units = 64;
  std::size_t lstm_units = 32;
  std::size_t heads = 8;
  std::size_t key_dim = 64;
  double dropout = 0.5;
  std::vector<std::size_t> head_widths{64, 32};
};

/// (BiGRU → LayerNorm → MHA → Dropout) ∥ (LSTM-last → Dropout) → dense head.
VariantSpec bigat_spec(std::size_t seq_len, std::size_t n_classes,
                       const BigatOptions& options = {});

struct NumberedVariant {
  int id = 0;
  VariantSpec spec;
};

/// The twelve ablation configurations, ids 1..12; id 4 is the canonical model.
/// Notation: "+" chains blocks inside a branch, "-" separates parallel branches.
std::vector<NumberedVariant> table5_variants(std::size_t seq_len, std::size_t n_classes);

/// Same topology with every width divided by `divisor` (floors at 2) and
/// key_dim capped at 3; used for gradient checks at tiny size.
VariantSpec miniature(const VariantSpec& spec, std::size_t divisor = 16);

struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered trainable arrays: branch order, then the head.
struct ModelParams {
  std::vector<NamedTensor> entries;

  std::size_t total_size() const;
  const Tensor& at(const std::string& name) const;
  /// Zero tensors with identical names and shapes.
  ModelParams zeros_like() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Row of the model summary table.
struct LayerInfo {
  std::string name;
  std::string kind;
  std::string units;
  Shape output_shape;  // batch axis included
  std::size_t params = 0;
  std::string connected_to;
};

struct ForwardPass {
  Tensor probs;
  /// Per-layer caches in execution order; empty for eval-mode predictions.
  std::vector<LayerCache> caches;
  /// Output shape of every summary row, same order as Network::summary().
  std::vector<Shape> shapes;
  std::vector<Shape> branch_out_shapes;
};

/// Compiled form of a VariantSpec: validated widths and parameter layout.
class Network {
 public:
  /// Throws ConstructionError naming the offending block on inconsistent specs.
  explicit Network(VariantSpec spec);

  const VariantSpec& spec() const { return spec_; }
  std::size_t param_total() const;
  std::vector<LayerInfo> summary(std::size_t batch = 0) const;

  ModelParams init(Rng& rng) const;

  /// Train mode needs `rng` when any dropout rate is positive.
  ForwardPass forward(const ModelParams& params, const Tensor& x, Mode mode, Rng* rng,
                      bool keep_caches) const;
  /// Gradient of a loss w.r.t. every parameter given dL/dprobs.
  ModelParams backward(const ModelParams& params, const ForwardPass& pass,
                       const Tensor& grad_probs) const;

 private:
  struct Layer {
    BlockSpec block;
    std::string name;
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    bool seq_out = true;
    std::size_t first_param = 0;
    std::size_t n_params = 0;  // number of tensors
    std::size_t n_scalars = 0;
    LayerParams shape_template;
  };
  struct Branch {
    std::vector<Layer> layers;
    bool flatten = false;
    std::size_t out_width = 0;  // after flatten
  };

  LayerParams gather(const ModelParams& params, const Layer& layer) const;
  void scatter(const LayerParams& grads, const Layer& layer, ModelParams& out) const;

  VariantSpec spec_;
  std::vector<Branch> branches_;
  std::vector<Layer> head_;
  std::vector<std::pair<std::string, Shape>> param_layout_;
};

ModelParams build(const VariantSpec& spec, Rng& rng);
std::size_t param_total(const VariantSpec& spec);

/// Class probabilities [b × n_classes]. Eval mode is deterministic; large
/// batches are evaluated in fixed-size chunks.
Tensor predict(const ModelParams& params, const VariantSpec& spec, const Tensor& x,
               Mode mode = Mode::kEval, Rng* rng = nullptr);

/// Rounds every parameter to the nearest float, the checkpoint precision.
void round_to_storage(ModelParams& params);

/// Summary table in the layout of the published model summary.
std::string format_summary(const Network& net);

}  // namespace bigat
