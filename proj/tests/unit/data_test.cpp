// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "bigat/data.hpp"
#include "bigat/error.hpp"

namespace bigat {
namespace {

Dataset labelled(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                 std::size_t n_classes) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_classes; ++c) names.push_back("c" + std::to_string(c));
  Dataset ds;
  ds.codec = LabelCodec(names);
  const std::size_t T = rows.front().size();
  ds.x = Tensor({rows.size(), T, 1});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t f = 0; f < T; ++f) ds.x[i * T + f] = rows[i][f];
  ds.y = y;
  ds.feature_names = default_feature_names(T);
  return ds;
}

Dataset counted(const std::vector<std::size_t>& counts, Rng& rng, std::size_t T = 3) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t k = 0; k < counts[c]; ++k) {
      std::vector<double> r(T);
      for (auto& v : r) v = rng.uniform(-1.0, 1.0) + static_cast<double>(c);
      rows.push_back(r);
      y.push_back(static_cast<int>(c));
    }
  return labelled(rows, y, counts.size());
}

// --- CSV -------------------------------------------------------------------

TEST(Csv, InfersKindsAndKeepsLabelCategorical) {
  std::istringstream in("dur,proto,bytes,Label\n1.5,tcp,100,Normal\n2,udp,,DoS\n");
  RawTable t = parse_csv(in);
  ASSERT_EQ(t.columns.size(), 4u);
  EXPECT_EQ(t.kinds[0], ColumnKind::kNumeric);
  EXPECT_EQ(t.kinds[1], ColumnKind::kCategorical);
  EXPECT_EQ(t.kinds[2], ColumnKind::kNumeric);
  EXPECT_EQ(t.kinds[3], ColumnKind::kCategorical);
  EXPECT_EQ(t.label_index(), 3u);
  EXPECT_EQ(t.n_rows(), 2u);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  std::istringstream in("a,\"b,c\",Label\r\n1,\"x \"\"y\"\"\",N\r\n");
  RawTable t = parse_csv(in);
  EXPECT_EQ(t.columns[1], "b,c");
  EXPECT_EQ(t.rows[0][1], "x \"y\"");
  EXPECT_EQ(t.rows[0][2], "N");
}

TEST(Csv, HeaderOnlyIsEmpty) {
  std::istringstream in("a,b,Label\n");
  EXPECT_EQ(parse_csv(in).n_rows(), 0u);
}

TEST(Csv, RaggedRowReportsLine) {
  std::istringstream in("a,b,Label\n1,2,N\n1,N\n");
  try {
    parse_csv(in);
    FAIL() << "expected RaggedRowError";
  } catch (const RaggedRowError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, MissingLabelColumn) {
  std::istringstream in("a,b\n1,2\n");
  EXPECT_THROW(parse_csv(in), MissingColumnError);
}

TEST(Csv, MissingFile) {
  EXPECT_THROW(load_csv("/nonexistent/flows.csv"), FileError);
}

TEST(Csv, WriteThenLoad) {
  const auto path = std::filesystem::temp_directory_path() / "bigat_data_test.csv";
  write_csv(path, {"x", "Label"}, {{"1", "a,b"}, {"2", "c"}});
  RawTable t = load_csv(path);
  EXPECT_EQ(t.rows[0][1], "a,b");
  EXPECT_EQ(t.rows[1][0], "2");
  std::filesystem::remove(path);
}

// --- cleaning / encoding -----------------------------------------------------

TEST(Clean, DropCounts) {
  std::istringstream in(
      "a,b,Label\n"
      "1,2,N\n"
      "1,2,N\n"      // duplicate
      "inf,2,N\n"    // non-finite
      "3,,N\n"       // empty numeric
      "4,5,\n"       // empty label
      "6,7,A\n");
  RawTable t = parse_csv(in);
  CleanReport rep;
  RawTable c = clean(t, &rep);
  EXPECT_EQ(c.n_rows(), 2u);
  EXPECT_EQ(rep.dropped_nonfinite, 2u);
  EXPECT_EQ(rep.dropped_empty_label, 1u);
  EXPECT_EQ(rep.dropped_duplicates, 1u);
}

TEST(Clean, NothingLeft) {
  std::istringstream in("a,Label\nnan,N\n");
  EXPECT_THROW(clean(parse_csv(in)), EmptyDatasetError);
}

TEST(Encode, LexicographicLabelsAndCategories) {
  std::istringstream in("proto,x,Label\ntcp,1,Normal\nudp,2,DDoS\nicmp,3,Bot\n");
  EncodedTable e = encode(parse_csv(in));
  EXPECT_EQ(e.encoding.codec.classes(), (std::vector<std::string>{"Bot", "DDoS", "Normal"}));
  EXPECT_EQ(e.labels, (std::vector<int>{2, 1, 0}));
  // icmp < tcp < udp
  EXPECT_EQ(e.features.at(0, 0), 1.0);
  EXPECT_EQ(e.features.at(1, 0), 2.0);
  EXPECT_EQ(e.features.at(2, 0), 0.0);
  EXPECT_EQ(e.features.at(1, 1), 2.0);
}

TEST(Encode, FittedEncodingHandlesUnseen) {
  std::istringstream fit_in("proto,Label\ntcp,A\nudp,B\n");
  const Encoding enc = encode(parse_csv(fit_in)).encoding;
  std::istringstream ok("proto,Label\ngre,A\n");
  EXPECT_EQ(encode(parse_csv(ok), enc).features.at(0, 0), 2.0);
  std::istringstream bad("proto,Label\ntcp,C\n");
  EXPECT_THROW(encode(parse_csv(bad), enc), UnknownClassError);
  EXPECT_EQ(Encoding::from_json(enc.to_json()).codec, enc.codec);
}

// --- scaling -----------------------------------------------------------------

TEST(Scaler, MinMaxClampAndConstant) {
  Tensor train({3, 2}, {0.0, 5.0, 5.0, 5.0, 10.0, 5.0});
  ScalerParams p = fit_scaler(train);
  EXPECT_EQ(p.min, (std::vector<double>{0.0, 5.0}));
  EXPECT_EQ(p.max, (std::vector<double>{10.0, 5.0}));
  Tensor out = apply_scaler(p, Tensor({3, 2}, {2.5, 7.0, -4.0, 5.0, 20.0, 1.0}));
  EXPECT_DOUBLE_EQ(out.at(0, 0), 0.25);
  EXPECT_EQ(out.at(1, 0), 0.0);
  EXPECT_EQ(out.at(2, 0), 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.at(i, 1), 0.0);
  const ScalerParams q = ScalerParams::from_json(p.to_json());
  EXPECT_EQ(q.min, p.min);
  EXPECT_EQ(q.max, p.max);
}

TEST(Scaler, SequenceShape) {
  Tensor s = to_sequences(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(s.shape(), (Shape{2, 3, 1}));
  EXPECT_EQ(s.at(1, 2, 0), 6.0);
}

// --- splitting -----------------------------------------------------------------

TEST(Split, StratifiedCounts) {
  Rng rng(3);
  Dataset ds = counted({60, 20}, rng);
  auto [tr, te] = stratified_split(ds, 0.6, rng);
  EXPECT_EQ(tr.class_counts(), (std::vector<std::size_t>{36, 12}));
  EXPECT_EQ(te.class_counts(), (std::vector<std::size_t>{24, 8}));
  EXPECT_EQ(tr.size(), 48u);
  EXPECT_EQ(te.size(), 32u);
}

TEST(Split, PartitionIsDisjointAndComplete) {
  Rng rng(4);
  Dataset ds = counted({30, 11, 7}, rng);
  auto [tr, te] = stratified_split(ds, 0.8, rng);
  std::multiset<std::vector<double>> all, parts;
  for (std::size_t i = 0; i < ds.size(); ++i) all.insert(ds.row(i));
  for (std::size_t i = 0; i < tr.size(); ++i) parts.insert(tr.row(i));
  for (std::size_t i = 0; i < te.size(); ++i) parts.insert(te.row(i));
  EXPECT_EQ(all, parts);
}

TEST(Split, Deterministic) {
  Rng a(5), b(5), g(6);
  Dataset ds = counted({20, 20}, g);
  EXPECT_EQ(stratified_split(ds, 0.7, a).first.y, stratified_split(ds, 0.7, b).first.y);
}

TEST(Split, Errors) {
  Rng rng(7);
  Dataset ds = counted({10, 1}, rng);
  EXPECT_THROW(stratified_split(ds, 0.5, rng), StratificationError);
  Dataset ok = counted({10, 10}, rng);
  EXPECT_THROW(stratified_split(ok, 1.0, rng), ConfigError);
  EXPECT_THROW(stratified_split(ok, 0.0, rng), ConfigError);
}

TEST(OneHot, Basic) {
  Tensor t = one_hot({2, 0}, 3);
  EXPECT_EQ(t.vec(), (std::vector<double>{0, 0, 1, 1, 0, 0}));
  EXPECT_THROW(one_hot({3}, 3), DataError);
}

// --- balancing -----------------------------------------------------------------

TEST(Ros, OnlyDuplicatesAndUniformCounts) {
  Rng rng(8);
  Dataset ds = counted({50, 7, 13}, rng);
  Dataset out = ros_balance(ds, rng);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{50, 50, 50}));
  std::set<std::pair<std::vector<double>, int>> originals;
  for (std::size_t i = 0; i < ds.size(); ++i) originals.insert({ds.row(i), ds.y[i]});
  for (std::size_t i = 0; i < out.size(); ++i)
    EXPECT_TRUE(originals.count({out.row(i), out.y[i]})) << "row " << i;
  // originals come first, untouched
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(out.row(i), ds.row(i));
}

// Distance from p to the segment [a, b].
double segment_distance(const std::vector<double>& p, const std::vector<double>& a,
                        const std::vector<double>& b) {
  double ab2 = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ab2 += (b[i] - a[i]) * (b[i] - a[i]);
    dot += (p[i] - a[i]) * (b[i] - a[i]);
  }
  const double t = ab2 > 0.0 ? std::clamp(dot / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = a[i] + t * (b[i] - a[i]);
    d2 += (p[i] - q) * (p[i] - q);
  }
  return std::sqrt(d2);
}

TEST(Smote, SyntheticPointsLieOnSameClassSegments) {
  Rng rng(9);
  Dataset ds = counted({1000, 40, 15}, rng, 4);
  Dataset out = smote_balance(ds, rng);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{1000, 1000, 1000}));
  for (std::size_t i = ds.size(); i < out.size(); ++i) {
    const auto p = out.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < ds.size(); ++a) {
      if (ds.y[a] != out.y[i]) continue;
      for (std::size_t b = a + 1; b < ds.size(); ++b)
        if (ds.y[b] == out.y[i]) best = std::min(best, segment_distance(p, ds.row(a), ds.row(b)));
    }
    ASSERT_LT(best, 1e-9) << "synthetic row " << i;
  }
}

TEST(Smote, ZeroLambdaReproducesSeeds) {
  Rng rng(10);
  Dataset ds = counted({20, 5}, rng);
  SmoteOptions opt;
  opt.fixed_lambda = 0.0;
  Dataset out = smote_balance(ds, rng, opt);
  std::set<std::vector<double>> minority;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.y[i] == 1) minority.insert(ds.row(i));
  for (std::size_t i = ds.size(); i < out.size(); ++i) EXPECT_TRUE(minority.count(out.row(i)));
}

TEST(Smote, SingletonFallsBackWithWarning) {
  Rng rng(11);
  Dataset ds = counted({6, 1}, rng);
  SmoteReport rep;
  Dataset out = smote_balance(ds, rng, {}, &rep);
  EXPECT_EQ(rep.warnings.size(), 1u);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{6, 6}));
  for (std::size_t i = ds.size(); i < out.size(); ++i) EXPECT_EQ(out.row(i), ds.row(6));
}

TEST(Balance, BalancedInputUnchanged) {
  Rng rng(12);
  Dataset ds = counted({5, 5}, rng);
  EXPECT_EQ(ros_balance(ds, rng).x, ds.x);
  EXPECT_EQ(smote_balance(ds, rng).x, ds.x);
}

// --- synthetic generator ---------------------------------------------------------

TEST(Synth, DeterministicAndSized) {
  SynthConfig cfg;
  cfg.n_per_class = 50;
  cfg.imbalance = {1.0, 0.1, 0.1};
  Rng a(13), b(13);
  Dataset x = synth_generate(cfg, a), y = synth_generate(cfg, b);
  EXPECT_EQ(x.x, y.x);
  EXPECT_EQ(x.y, y.y);
  EXPECT_EQ(x.size(), 50u + 5 + 5 + 3 * 50);
  EXPECT_EQ(x.codec.classes().back(), "Normal");
  EXPECT_EQ(x.seq_len(), 20u);
}

TEST(Synth, HighSeparationIsNearlyCentroidSeparable) {
  SynthConfig cfg;
  cfg.n_per_class = 200;
  Rng rng(14);
  Dataset ds = synth_generate(cfg, rng);
  const std::size_t T = ds.seq_len(), c = ds.n_classes();
  std::vector<std::vector<double>> mean(c, std::vector<double>(T, 0.0));
  auto counts = ds.class_counts();
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t f = 0; f < T; ++f) mean[ds.y[i]][f] += ds.x[i * T + f] / counts[ds.y[i]];
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      double d = 0.0;
      for (std::size_t f = 0; f < T; ++f) d += std::pow(ds.x[i * T + f] - mean[k][f], 2);
      if (d < best_d) best_d = d, best = k;
    }
    hits += static_cast<int>(best) == ds.y[i];
  }
  EXPECT_GT(static_cast<double>(hits) / ds.size(), 0.99);
}

}  // namespace
}  // namespace bigat
