// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "bigat/error.hpp"
#include "bigat/explain.hpp"
#include "bigat/training.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace bigat {
namespace {

// Row-wise scalar function lifted to a single-column batch function.
BatchValueFn lift(std::function<double(const std::vector<double>&)> g) {
  return [g](const Tensor& rows) {
    Tensor out({rows.dim(0), 1});
    std::vector<double> r(rows.dim(1));
    for (std::size_t i = 0; i < rows.dim(0); ++i) {
      for (std::size_t j = 0; j < r.size(); ++j) r[j] = rows.at(i, j);
      out[i] = g(r);
    }
    return out;
  };
}

// Nonlinear 8-feature surrogate with pairwise interactions.
double surrogate(const std::vector<double>& z) {
  double s = 0.3;
  for (std::size_t i = 0; i < z.size(); ++i) s += (0.4 + 0.1 * i) * z[i];
  s += 0.8 * z[0] * z[1] - 0.5 * z[2] * z[5] + 0.3 * std::sin(z[3] * z[7]);
  return std::tanh(s);
}

double column_value(const BatchValueFn& f, const std::vector<double>& z) {
  return f(Tensor({1, z.size()}, z))[0];
}

TEST(Exact, EfficiencyAndSymmetry) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t F = 2 + rng.below(9);
    std::vector<double> x(F), b(F);
    for (auto& v : x) v = rng.uniform(-2, 2);
    for (auto& v : b) v = rng.uniform(-1, 1);
    // features 0 and 1 play identical roles
    x[1] = x[0];
    b[1] = b[0];
    auto f = lift([](const std::vector<double>& z) {
      double s = z[0] + z[1] + z[0] * z[1];
      for (std::size_t i = 2; i < z.size(); ++i)
        s += std::sin(z[i] * (i + 1)) * (i > 2 ? z[i - 1] : z[0] + z[1]);
      return std::exp(-0.1 * s * s) + s;
    });
    const Tensor phi = shapley_exact_small(f, x, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < F; ++i) sum += phi[i];
    EXPECT_NEAR(sum, column_value(f, x) - column_value(f, b), 1e-9);
    EXPECT_NEAR(phi[0], phi[1], 1e-9);
  }
}

TEST(Exact, HandEnumeratedTwoFeatureCases) {
  const std::vector<double> x{1, 1}, b{0, 0};
  // XOR: v(∅)=0, v({1})=v({2})=1, v({1,2})=0 → both ½·1 + ½·(−1) = 0
  const Tensor xor_phi = shapley_exact_small(
      lift([](const std::vector<double>& z) { return z[0] + z[1] - 2 * z[0] * z[1]; }), x, b);
  EXPECT_NEAR(xor_phi[0], 0.0, 1e-15);
  EXPECT_NEAR(xor_phi[1], 0.0, 1e-15);
  // x1 + 2·x1·x2: v(∅)=0, v({1})=1, v({2})=0, v({1,2})=3
  const Tensor phi = shapley_exact_small(
      lift([](const std::vector<double>& z) { return z[0] + 2 * z[0] * z[1]; }), x, b);
  EXPECT_NEAR(phi[0], 0.5 * 1 + 0.5 * 3, 1e-15);
  EXPECT_NEAR(phi[1], 0.5 * 0 + 0.5 * 2, 1e-15);
}

TEST(Exact, FeatureCap) {
  const std::vector<double> x(13, 1.0);
  EXPECT_THROW(shapley_exact_small(lift(surrogate), x, x), ConfigError);
  EXPECT_THROW(shapley_exact_small(lift(surrogate), {1.0}, {1.0, 2.0}), ShapeError);
}

TEST(Permutation, AdditiveIsExactEveryPermutation) {
  const std::vector<double> w{0.5, -1.5, 2.0, 0.25};
  const std::vector<double> x{1.0, 2.0, -1.0, 4.0}, b(4, 0.0);
  Rng rng(2);
  const ShapleyEstimate est = shapley_permutation(
      lift([&](const std::vector<double>& z) {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) s += w[i] * z[i];
        return s;
      }),
      x, b, 7, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(est.values[i], w[i] * x[i], 1e-12);
    EXPECT_NEAR(est.std_error[i], 0.0, 1e-12);
  }
}

TEST(Permutation, NullPlayer) {
  Rng rng(3);
  auto f = lift([](const std::vector<double>& z) { return std::tanh(z[0] * z[1] + z[2]); });
  const ShapleyEstimate est = shapley_permutation(f, {1.0, -2.0, 0.5, 3.0}, {0, 0, 0, 0}, 200, rng);
  EXPECT_LE(std::abs(est.values[3]), 3 * est.std_error[3] + 1e-15);
  EXPECT_EQ(est.values[3], 0.0);
  EXPECT_THROW(shapley_permutation(f, {1, 1, 1, 1}, {0, 0, 0, 0}, 0, rng), ConfigError);
}

TEST(Permutation, MatchesExactOnEightFeatures) {
  Rng rng(4);
  const auto f = lift(surrogate);
  std::vector<double> x(8), b(8);
  for (auto& v : x) v = rng.uniform(0.5, 1.5);
  for (auto& v : b) v = rng.uniform(-1.0, -0.5);
  const Tensor exact = shapley_exact_small(f, x, b);
  const double gap = std::abs(column_value(f, x) - column_value(f, b));
  ASSERT_GT(gap, 0.1);
  const ShapleyEstimate mc = shapley_permutation(f, x, b, 5000, rng);
  EXPECT_LT(max_abs_diff(mc.values, exact), 0.01 * gap);
}

TEST(Permutation, ErrorShrinksLikeInverseSqrt) {
  const auto f = lift(surrogate);
  std::vector<double> x(8), b(8);
  Rng setup(5);
  for (auto& v : x) v = setup.uniform(0.5, 1.5);
  for (auto& v : b) v = setup.uniform(-1.0, -0.5);
  const Tensor exact = shapley_exact_small(f, x, b);
  auto rms_error = [&](std::size_t n) {
    double sq = 0.0;
    const int reps = 8;
    for (int r = 0; r < reps; ++r) {
      Rng rng(1000 + r);
      const Tensor est = shapley_permutation(f, x, b, n, rng).values;
      for (std::size_t i = 0; i < 8; ++i) sq += std::pow(est[i] - exact[i], 2);
    }
    return std::sqrt(sq / (8.0 * reps));
  };
  const double e100 = rms_error(100), e1k = rms_error(1000), e10k = rms_error(10000);
  const double expect = std::sqrt(10.0);
  for (double ratio : {e100 / e1k, e1k / e10k}) {
    EXPECT_GT(ratio, expect / 3) << e100 << " " << e1k << " " << e10k;
    EXPECT_LT(ratio, expect * 3) << e100 << " " << e1k << " " << e10k;
  }
}

// --- summaries -----------------------------------------------------------------

Dataset rows_dataset(const std::vector<std::vector<double>>& rows) {
  Dataset ds;
  const std::size_t T = rows[0].size();
  ds.x = Tensor({rows.size(), T, 1});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t f = 0; f < T; ++f) ds.x[i * T + f] = rows[i][f];
  ds.y.assign(rows.size(), 0);
  ds.codec = LabelCodec({"a", "b"});
  ds.feature_names = default_feature_names(T);
  return ds;
}

// Two-class softmax that reads only feature 0.
Tensor reads_first(const Tensor& rows) {
  Tensor out({rows.dim(0), 2});
  for (std::size_t i = 0; i < rows.dim(0); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-3.0 * rows.at(i, 0)));
    out.at(i, 0) = p;
    out.at(i, 1) = 1.0 - p;
  }
  return out;
}

TEST(Summary, OnlyReadFeatureRanksFirst) {
  Rng rng(6);
  std::vector<std::vector<double>> rows(20, std::vector<double>(5));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform(-1, 1);
  const Dataset ds = rows_dataset(rows);
  AttributionSettings s;
  s.n_permutations = 20;
  const Attribution a = attribution_summary(reads_first, ds, ds, s);
  EXPECT_EQ(a.ranking(0).front(), 0u);
  EXPECT_EQ(a.ranking(1).front(), 0u);
  for (std::size_t f = 1; f < 5; ++f) EXPECT_EQ(a.mean_abs.at(f, 0), 0.0);
  const auto j = a.to_json(3);
  EXPECT_EQ(j["per_class"]["a"][0]["feature"], "f0");
  EXPECT_EQ(j["overall"].size(), 3u);
}

TEST(Summary, SingleInstanceEqualsAbsValues) {
  const Dataset bg = rows_dataset({{0.2, 0.1, -0.3}, {-0.2, 0.5, 0.1}});
  const Dataset one = rows_dataset({{0.9, -0.4, 0.7}});
  AttributionSettings s;
  s.n_permutations = 50;
  BatchValueFn f = [](const Tensor& rows) {
    Tensor out({rows.dim(0), 2});
    for (std::size_t i = 0; i < rows.dim(0); ++i) {
      out.at(i, 0) = rows.at(i, 0) * rows.at(i, 1) + rows.at(i, 2);
      out.at(i, 1) = -rows.at(i, 1);
    }
    return out;
  };
  const Attribution a = attribution_summary(f, bg, one, s);
  Rng rng = Rng(s.seed).derive(0);
  const ShapleyEstimate est = shapley_permutation(f, one.row(0), background_mean(bg), 50, rng);
  for (std::size_t i = 0; i < est.values.size(); ++i)
    EXPECT_EQ(a.mean_abs[i], std::abs(est.values[i]));
  EXPECT_THROW(attribution_summary(f, Dataset{}, one, s), DataError);
}

TEST(Summary, RankingStableAcrossSeedsOnTrainedModel) {
  SynthConfig cfg;
  cfg.n_classes = 3;
  cfg.n_per_class = 60;
  cfg.seq_len = 12;
  Rng data_rng(7);
  Dataset ds = synth_generate(cfg, data_rng);
  ds.x = to_sequences(apply_scaler(fit_scaler(ds.x), ds.x.reshaped({ds.size(), 12})));
  BigatOptions o;
  o.gru_units = 8;
  o.lstm_units = 8;
  o.heads = 2;
  o.key_dim = 4;
  o.head_widths = {16, 16};
  o.dropout = 0.2;
  const VariantSpec spec = bigat_spec(12, 3, o);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 16;
  tc.learning_rate = 3e-3;
  const TrainResult tr = train(spec, ds, {}, tc);

  AttributionSettings s;
  s.n_permutations = 5000;
  // same rows, independent permutation streams
  const Dataset fixed = ds.subset({0, 70, 150});
  s.seed = 11;
  const Attribution fa = attribution_summary(tr.params, spec, ds, fixed, s);
  s.seed = 12;
  const Attribution fb = attribution_summary(tr.params, spec, ds, fixed, s);
  std::vector<double> sa(12, 0.0), sb(12, 0.0);
  for (std::size_t f = 0; f < 12; ++f)
    for (std::size_t k = 0; k < 3; ++k) sa[f] += fa.mean_abs.at(f, k), sb[f] += fb.mean_abs.at(f, k);
  auto top = fa.overall_ranking();
  top.resize(10);
  ASSERT_GT(tr.history.rows.back().train_acc, 0.9);
  EXPECT_GE(testing::kendall_tau(sa, sb, top), 0.8);
}

TEST(Summary, IncompatibleWidth) {
  const VariantSpec spec = testing::tiny_bigat();
  Rng rng(8);
  const ModelParams p = build(spec, rng);
  const Dataset ds = rows_dataset({{1, 2, 3}});
  EXPECT_THROW(attribution_summary(p, spec, ds, ds, {}), IncompatibleError);
}

}  // namespace
}  // namespace bigat
