// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <unordered_set>

#include "bigat/data.hpp"
#include "bigat/error.hpp"

namespace bigat {

// ---------------------------------------------------------------------------
// LabelCodec / Dataset

LabelCodec LabelCodec::fit(const std::vector<std::string>& names) {
  std::set<std::string> uniq(names.begin(), names.end());
  return LabelCodec(std::vector<std::string>(uniq.begin(), uniq.end()));
}

LabelCodec::LabelCodec(std::vector<std::string> sorted_classes)
    : classes_(std::move(sorted_classes)) {
  if (!std::is_sorted(classes_.begin(), classes_.end()) ||
      std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end()) {
    throw DataError("label codec classes must be unique and lexicographically sorted");
  }
}

std::optional<int> LabelCodec::find(const std::string& name) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), name);
  if (it == classes_.end() || *it != name) return std::nullopt;
  return static_cast<int>(it - classes_.begin());
}

int LabelCodec::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw UnknownClassError("unknown class label '" + name + "'");
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(codec.size(), 0);
  for (int c : y) ++counts.at(static_cast<std::size_t>(c));
  return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t T = seq_len();
  Dataset out;
  out.codec = codec;
  out.feature_names = feature_names;
  out.x = Tensor({indices.size(), T, 1});
  out.y.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    std::copy_n(x.data().begin() + src * T, T, out.x.data().begin() + r * T);
    out.y.push_back(y.at(src));
  }
  return out;
}

std::vector<double> Dataset::row(std::size_t i) const {
  const std::size_t T = seq_len();
  return std::vector<double>(x.data().begin() + i * T, x.data().begin() + (i + 1) * T);
}

std::vector<std::string> default_feature_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
  return names;
}

// ---------------------------------------------------------------------------
// Cleaning and encoding

RawTable clean(const RawTable& table, CleanReport* report) {
  CleanReport rep;
  const std::size_t li = table.label_index();
  RawTable out = table;
  out.rows.clear();
  std::set<std::vector<std::string>> seen;
  for (const auto& row : table.rows) {
    if (row[li].empty()) {
      ++rep.dropped_empty_label;
      continue;
    }
    bool finite = true;
    for (std::size_t c = 0; c < row.size() && finite; ++c) {
      if (c == li || table.kinds[c] != ColumnKind::kNumeric) continue;
      if (row[c].empty()) {
        finite = false;
        break;
      }
      finite = std::isfinite(std::strtod(row[c].c_str(), nullptr));
    }
    if (!finite) {
      ++rep.dropped_nonfinite;
      continue;
    }
    if (!seen.insert(row).second) {
      ++rep.dropped_duplicates;
      continue;
    }
    out.rows.push_back(row);
  }
  if (report) *report = rep;
  if (out.rows.empty()) throw EmptyDatasetError("cleaning removed every row");
  return out;
}

nlohmann::json Encoding::to_json() const {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : feature_kinds) kinds.push_back(k == ColumnKind::kNumeric ? "numeric" : "categorical");
  return {{"feature_names", feature_names},
          {"feature_kinds", kinds},
          {"categories", categories},
          {"classes", codec.classes()}};
}

Encoding Encoding::from_json(const nlohmann::json& j) {
  Encoding e;
  e.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& k : j.at("feature_kinds"))
    e.feature_kinds.push_back(k.get<std::string>() == "numeric" ? ColumnKind::kNumeric
                                                               : ColumnKind::kCategorical);
  e.categories = j.at("categories").get<std::vector<std::vector<std::string>>>();
  e.codec = LabelCodec(j.at("classes").get<std::vector<std::string>>());
  return e;
}

namespace {

EncodedTable encode_with(const RawTable& table, const Encoding& enc) {
  const std::size_t li = table.label_index();
  std::vector<std::size_t> cols;
  for (const auto& name : enc.feature_names) {
    auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end()) throw MissingColumnError("feature column '" + name + "' not found");
    cols.push_back(static_cast<std::size_t>(it - table.columns.begin()));
  }
  const std::size_t n = table.rows.size(), T = cols.size();
  EncodedTable out;
  out.encoding = enc;
  out.features = Tensor({n, T});
  out.labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    for (std::size_t f = 0; f < T; ++f) {
      const std::string& cell = row[cols[f]];
      double v;
      if (enc.feature_kinds[f] == ColumnKind::kNumeric) {
        v = std::strtod(cell.c_str(), nullptr);
      } else {
        const auto& cats = enc.categories[f];
        auto it = std::lower_bound(cats.begin(), cats.end(), cell);
        v = static_cast<double>(it != cats.end() && *it == cell ? it - cats.begin() : cats.size());
      }
      out.features.at(r, f) = v;
    }
    out.labels.push_back(enc.codec.index(row[li]));
  }
  return out;
}

}  // namespace

EncodedTable encode(const RawTable& table) {
  const std::size_t li = table.label_index();
  Encoding enc;
  std::vector<std::string> labels;
  for (const auto& row : table.rows) labels.push_back(row[li]);
  enc.codec = LabelCodec::fit(labels);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c == li) continue;
    enc.feature_names.push_back(table.columns[c]);
    enc.feature_kinds.push_back(table.kinds[c]);
    std::vector<std::string> cats;
    if (table.kinds[c] == ColumnKind::kCategorical) {
      std::set<std::string> uniq;
      for (const auto& row : table.rows) uniq.insert(row[c]);
      cats.assign(uniq.begin(), uniq.end());
    }
    enc.categories.push_back(std::move(cats));
  }
  return encode_with(table, enc);
}

EncodedTable encode(const RawTable& table, const Encoding& fitted) {
  return encode_with(table, fitted);
}

// ---------------------------------------------------------------------------
// Scaling and reshaping

nlohmann::json ScalerParams::to_json() const { return {{"min", min}, {"max", max}}; }

ScalerParams ScalerParams::from_json(const nlohmann::json& j) {
  return {j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
}

ScalerParams fit_scaler(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("fit_scaler: expected [n × T], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), T = x.size() / std::max<std::size_t>(n, 1);
  ScalerParams p{std::vector<double>(T, 0.0), std::vector<double>(T, 0.0)};
  if (n == 0) return p;
  for (std::size_t f = 0; f < T; ++f) p.min[f] = p.max[f] = x[f];
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t f = 0; f < T; ++f) {
      p.min[f] = std::min(p.min[f], x[r * T + f]);
      p.max[f] = std::max(p.max[f], x[r * T + f]);
    }
  return p;
}

Tensor apply_scaler(const ScalerParams& p, const Tensor& x) {
  const std::size_t T = p.min.size();
  if (x.rank() < 2 || x.size() != x.dim(0) * T) {
    throw ShapeError("apply_scaler: features " + shape_str(x.shape()) + " vs scaler width " +
                     std::to_string(T));
  }
  Tensor y = x;
  for (std::size_t r = 0; r < x.dim(0); ++r)
    for (std::size_t f = 0; f < T; ++f) {
      const double range = p.max[f] - p.min[f];
      double& v = y[r * T + f];
      v = range > 0.0 ? std::clamp((v - p.min[f]) / range, 0.0, 1.0) : 0.0;
    }
  return y;
}

Tensor to_sequences(const Tensor& features) {
  if (features.rank() != 2) {
    throw ShapeError("to_sequences: expected [n × T], got " + shape_str(features.shape()));
  }
  return features.reshaped({features.dim(0), features.dim(1), 1});
}

// ---------------------------------------------------------------------------
// Splitting and label transforms

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double frac, Rng& rng) {
  if (!(frac > 0.0 && frac < 1.0)) {
    throw ConfigError("train fraction must lie strictly between 0 and 1, got " +
                      std::to_string(frac));
  }
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.y[i]).push_back(i);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2) {
      throw StratificationError("class '" + ds.codec.name(c) + "' has fewer than 2 samples");
    }
    rng.shuffle(idx);
    auto n_train = static_cast<std::size_t>(std::llround(frac * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
    test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
  }
  rng.shuffle(train_idx);
  rng.shuffle(test_idx);
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

Tensor one_hot(const std::vector<int>& labels, std::size_t c) {
  Tensor t({labels.size(), c});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " +
                      std::to_string(c) + ")");
    }
    t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

}  // namespace bigat
