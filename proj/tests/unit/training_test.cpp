// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "bigat/error.hpp"
#include "bigat/training.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace bigat {
namespace {

using testing::random_tensor;
using testing::tiny_bigat;

Tensor random_probs(std::size_t b, std::size_t c, Rng& rng) {
  Tensor p({b, c});
  for (std::size_t i = 0; i < b; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (p.at(i, j) = rng.uniform(0.05, 1.0));
    for (std::size_t j = 0; j < c; ++j) p.at(i, j) /= s;
  }
  return p;
}

std::vector<int> random_labels(std::size_t b, std::size_t c, Rng& rng) {
  std::vector<int> y(b);
  for (auto& v : y) v = static_cast<int>(rng.below(c));
  return y;
}

TEST(Loss, FocalGammaZeroIsCce) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 1 + rng.below(16), c = 2 + rng.below(5);
    const Tensor p = random_probs(b, c, rng);
    const Tensor y = one_hot(random_labels(b, c, rng), c);
    const LossResult a = cce_loss(p, y), f = focal_loss(p, y, 0.0);
    EXPECT_NEAR(a.loss, f.loss, 1e-12);
    EXPECT_LT(max_abs_diff(a.grad_probs, f.grad_probs), 1e-12);
  }
}

TEST(Loss, UniformTwoClassIsLn2) {
  const Tensor p({3, 2}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(cce_loss(p, one_hot({0, 1, 1}, 2)).loss, std::log(2.0), 1e-12);
}

TEST(Loss, ClampedAtZeroProbability) {
  const Tensor p({1, 2}, {0.0, 1.0});
  EXPECT_NEAR(cce_loss(p, one_hot({0}, 2)).loss, -std::log(1e-12), 1e-9);
}

TEST(Loss, FocalDownweightsEasyExamples) {
  const Tensor easy({1, 2}, {0.9, 0.1});
  const Tensor y = one_hot({0}, 2);
  EXPECT_NEAR(focal_loss(easy, y, 2.0).loss, 0.01 * -std::log(0.9), 1e-12);
  EXPECT_NEAR(focal_loss(easy, y, 2.0, {0.25, 1.0}).loss, 0.0025 * -std::log(0.9), 1e-12);
  EXPECT_THROW(focal_loss(easy, y, -1.0), ConfigError);
  EXPECT_THROW(focal_loss(easy, y, 2.0, {1.0}), ConfigError);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  for (double gamma : {0.0, 0.5, 2.0, 3.0}) {
    const Tensor p = random_probs(4, 3, rng);
    const Tensor y = one_hot(random_labels(4, 3, rng), 3);
    const std::vector<double> alpha{0.3, 1.0, 2.0};
    const Tensor an = focal_loss(p, y, gamma, alpha).grad_probs;
    const Tensor fd = finite_diff_grad([&](const Tensor& q) { return focal_loss(q, y, gamma, alpha).loss; }, p);
    EXPECT_LT(max_relative_error(an, fd), 1e-6) << "gamma " << gamma;
  }
  const Tensor p = random_probs(5, 4, rng);
  const Tensor y = one_hot(random_labels(5, 4, rng), 4);
  const Tensor fd = finite_diff_grad([&](const Tensor& q) { return cce_loss(q, y).loss; }, p);
  EXPECT_LT(max_relative_error(cce_loss(p, y).grad_probs, fd), 1e-6);
}

TEST(Loss, ShapeMismatch) {
  EXPECT_THROW(cce_loss(Tensor({2, 3}), Tensor({2, 2})), ShapeError);
}

// --- Adam ------------------------------------------------------------------

ModelParams scalar_params(double v) { return {{{"w", Tensor({1}, {v})}}}; }

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr·g/(|g| + eps/…) ≈ lr·sign(g).
  ModelParams p = scalar_params(1.0);
  AdamState s = AdamState::for_params(p);
  adam_step(p, scalar_params(4.0), s, 0.1);
  EXPECT_NEAR(p.entries[0].value[0], 1.0 - 0.1 * 4.0 / (4.0 + 1e-7), 1e-15);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, TwoStepsByHand) {
  ModelParams p = scalar_params(0.0);
  AdamState s = AdamState::for_params(p);
  adam_step(p, scalar_params(1.0), s, 0.01);
  adam_step(p, scalar_params(-2.0), s, 0.01);
  const double m = 0.9 * 0.1 + 0.1 * -2.0;
  const double v = 0.999 * 0.001 + 0.001 * 4.0;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double expect = -0.01 * 1.0 / (1.0 + 1e-7) - 0.01 * mhat / (std::sqrt(vhat) + 1e-7);
  EXPECT_NEAR(p.entries[0].value[0], expect, 1e-15);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  Rng rng(3);
  ModelParams p{{{"w", random_tensor({5}, rng, 3.0)}}};
  const std::vector<double> target{1, -2, 0.5, 3, -1};
  AdamState s = AdamState::for_params(p);
  for (int it = 0; it < 3000; ++it) {
    ModelParams g = p.zeros_like();
    for (std::size_t i = 0; i < 5; ++i) g.entries[0].value[i] = 2 * (p.entries[0].value[i] - target[i]);
    adam_step(p, g, s, 0.05);
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(p.entries[0].value[i], target[i], 1e-3);
}

TEST(Adam, MismatchRejected) {
  ModelParams p = scalar_params(0.0);
  AdamState s = AdamState::for_params(p);
  ModelParams g{{{"w", Tensor({2})}}};
  EXPECT_THROW(adam_step(p, g, s, 0.1), ShapeError);
}

// --- training loop -----------------------------------------------------------

Dataset tiny_data(std::size_t per_class, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_classes = 3;
  cfg.n_per_class = per_class;
  cfg.seq_len = 6;
  cfg.separation = 2.0;
  Rng rng(seed);
  return synth_generate(cfg, rng);
}

TEST(Train, StepCountKeepsPartialBatch) {
  Dataset ds = tiny_data(4, 1).subset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  const TrainResult r = train(tiny_bigat(), ds, {}, cfg);
  EXPECT_EQ(r.history.optimizer_steps, 6u);
  EXPECT_EQ(r.history.rows.size(), 2u);
}

TEST(Train, BitIdenticalAcrossRuns) {
  const Dataset ds = tiny_data(20, 2);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 3;
  cfg.balancing = Balancing::kSmote;
  const TrainResult a = train(tiny_bigat(), ds, ds, cfg);
  const TrainResult b = train(tiny_bigat(), ds, ds, cfg);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.params, b.params);
  cfg.seed = 43;
  EXPECT_NE(train(tiny_bigat(), ds, ds, cfg).params, a.params);
}

TEST(Train, LearnsSeparableData) {
  const Dataset ds = tiny_data(60, 3);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 15;
  cfg.learning_rate = 3e-3;
  const TrainResult r = train(tiny_bigat(), ds, ds, cfg);
  EXPECT_LT(r.history.rows.back().train_loss, r.history.rows.front().train_loss);
  EXPECT_GT(r.history.rows.back().val_acc, 0.9);
}

TEST(Train, FocalLossTrains) {
  const Dataset ds = tiny_data(30, 4);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.loss = LossKind::kFocal;
  const TrainResult r = train(tiny_bigat(), ds, {}, cfg);
  for (const auto& row : r.history.rows) EXPECT_TRUE(std::isfinite(row.train_loss));
}

TEST(Train, DivergenceNamesEpochAndBatch) {
  const Dataset ds = tiny_data(10, 5);
  TrainConfig cfg;
  cfg.batch_size = 5;
  cfg.epochs = 3;
  cfg.learning_rate = 1e300;
  try {
    train(tiny_bigat(), ds, {}, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Train, InputValidation) {
  TrainConfig cfg;
  EXPECT_THROW(train(tiny_bigat(), Dataset{}, {}, cfg), EmptyDatasetError);
  const Dataset ds = tiny_data(5, 6);
  EXPECT_THROW(train(bigat_spec(7, 3), ds, {}, cfg), ShapeError);
  cfg.batch_size = 0;
  EXPECT_THROW(train(tiny_bigat(), ds, {}, cfg), ConfigError);
}

TEST(TrainConfigJson, RoundTripAndErrors) {
  TrainConfig c;
  c.loss = LossKind::kFocal;
  c.balancing = Balancing::kRos;
  c.epochs = 7;
  const TrainConfig d = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(d.loss, LossKind::kFocal);
  EXPECT_EQ(d.balancing, Balancing::kRos);
  EXPECT_EQ(d.epochs, 7u);
  EXPECT_THROW(TrainConfig::from_json({{"loss", "hinge"}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"epochs", "many"}}), ConfigError);
}

}  // namespace
}  // namespace bigat
