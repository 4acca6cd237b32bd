// SPDX-License-Identifier: Apache-2.0
//
// Ablation variants. In the variant names "+" chains blocks inside one branch
// (left block applied first) and "-" separates parallel branches. Two
// conventions carry over from the canonical model:
//   * a LayerNorm sits between a recurrent block and a following MHA;
//   * every branch ends in Dropout(rate).
// A branch that starts with MHA on the raw width-1 sequence first projects it
// per time step to the width the following recurrent block would produce
// (2·units for BiGRU, units for LSTM).
#include <algorithm>

#include "bigat/model.hpp"

namespace bigat {
namespace {

bool is_recurrent(BlockKind k) {
  return k == BlockKind::kBiGru || k == BlockKind::kLstmLast || k == BlockKind::kLstmSeq;
}

std::size_t recurrent_width(const BlockSpec& b) {
  return b.kind == BlockKind::kBiGru ? 2 * b.units : b.units;
}

// Expands a "+"-chain into a branch pipeline.
std::vector<BlockSpec> chain(std::vector<BlockSpec> blocks, double rate) {
  std::vector<BlockSpec> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockSpec& b = blocks[i];
    if (b.kind == BlockKind::kMha && i == 0 && blocks.size() > 1 && is_recurrent(blocks[1].kind)) {
      out.push_back(BlockSpec::project(recurrent_width(blocks[1])));
    }
    out.push_back(b);
    if (is_recurrent(b.kind) && i + 1 < blocks.size() && blocks[i + 1].kind == BlockKind::kMha) {
      out.push_back(BlockSpec::layer_norm());
    }
  }
  // An LSTM feeding further sequence blocks must emit the whole sequence.
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i].kind == BlockKind::kLstmLast) out[i].kind = BlockKind::kLstmSeq;
  }
  out.push_back(BlockSpec::dropout(rate));
  return out;
}

VariantSpec make(std::string name, std::size_t T, std::size_t c, double rate,
                 std::vector<std::vector<BlockSpec>> chains) {
  VariantSpec s;
  s.name = std::move(name);
  s.seq_len = T;
  s.n_classes = c;
  s.dropout_rate = rate;
  for (auto& ch : chains) s.branches.push_back(chain(std::move(ch), rate));
  return s;
}

}  // namespace

VariantSpec bigat_spec(std::size_t seq_len, std::size_t n_classes, const BigatOptions& o) {
  VariantSpec s;
  s.name = "BiGAT-ID";
  s.seq_len = seq_len;
  s.n_classes = n_classes;
  s.dropout_rate = o.dropout;
  s.head_widths = o.head_widths;
  s.branches = {
      {BlockSpec::bigru(o.gru_units), BlockSpec::layer_norm(), BlockSpec::mha(o.heads, o.key_dim),
       BlockSpec::dropout(o.dropout)},
      {BlockSpec::lstm_last(o.lstm_units), BlockSpec::dropout(o.dropout)},
  };
  return s;
}

std::vector<NumberedVariant> table5_variants(std::size_t T, std::size_t c) {
  using B = BlockSpec;
  const auto gru = B::bigru(64);
  const auto lstm = B::lstm_last(32);
  const auto mha8 = B::mha(8, 64);
  std::vector<NumberedVariant> v;
  v.push_back({1, make("#1 BiGRU64+MHA8", T, c, 0.5, {{gru, mha8}})});
  v.push_back({2, make("#2 LSTM32+MHA8", T, c, 0.5, {{lstm, mha8}})});
  v.push_back({3, make("#3 BiGRU64-(LSTM32+MHA8)", T, c, 0.5, {{gru}, {lstm, mha8}})});
  {
    VariantSpec s = bigat_spec(T, c);
    s.name = "#4 (BiGRU64+MHA8)-LSTM32 [BiGAT-ID]";
    v.push_back({4, std::move(s)});
  }
  v.push_back({5, make("#5 (MHA8+BiGRU64)-LSTM32", T, c, 0.5, {{mha8, gru}, {lstm}})});
  v.push_back({6, make("#6 BiGRU64-(MHA8+LSTM32)", T, c, 0.5, {{gru}, {mha8, lstm}})});
  v.push_back({7, make("#7 (BiGRU128+MHA8)-LSTM256", T, c, 0.5,
                       {{B::bigru(128), mha8}, {B::lstm_last(256)}})});
  v.push_back({8, make("#8 (BiGRU64+MHA2)-LSTM32", T, c, 0.5, {{gru, B::mha(2, 64)}, {lstm}})});
  v.push_back({9, make("#9 (BiGRU64+MHA4)-LSTM32", T, c, 0.5, {{gru, B::mha(4, 64)}, {lstm}})});
  v.push_back({10, make("#10 (BiGRU64+MHA8)-LSTM32 0.3D", T, c, 0.3, {{gru, mha8}, {lstm}})});
  v.push_back({11, make("#11 (BiGRU64+MHA8)-LSTM32 0.7D", T, c, 0.7, {{gru, mha8}, {lstm}})});
  v.push_back({12, make("#12 (BiGRU64+MHA8)-LSTM32 0.2D", T, c, 0.2, {{gru, mha8}, {lstm}})});
  return v;
}

VariantSpec miniature(const VariantSpec& spec, std::size_t divisor) {
  auto shrink = [divisor](std::size_t v) { return std::max<std::size_t>(2, v / divisor); };
  VariantSpec s = spec;
  for (auto& br : s.branches)
    for (auto& b : br) {
      if (b.units) b.units = shrink(b.units);
      if (b.key_dim) b.key_dim = std::min<std::size_t>(3, b.key_dim);
    }
  for (auto& w : s.head_widths) w = shrink(w);
  return s;
}

}  // namespace bigat
