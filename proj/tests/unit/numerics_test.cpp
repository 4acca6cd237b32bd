// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "bigat/error.hpp"
#include "bigat/numerics.hpp"
#include "bigat/rng.hpp"
#include "oracles.hpp"

namespace bigat {
namespace {

using testing::random_tensor;

TEST(Matmul, IdentityIsExact) {
  Rng rng(1);
  Tensor m = random_tensor({3, 5}, rng);
  EXPECT_EQ(matmul(Tensor::identity(3), m), m);
  EXPECT_EQ(matmul(m, Tensor::identity(5)), m);
}

TEST(Matmul, HandArithmetic) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {1, 1});
  EXPECT_EQ(matmul(a, b), Tensor({2, 1}, {3, 7}));
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    Tensor a = random_tensor({5, 7}, rng), b = random_tensor({7, 3}, rng);
    EXPECT_LT(max_abs_diff(matmul(a, b), testing::matmul_triple_loop(a, b)), 1e-12);
  }
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({4, 2}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("(2, 3)"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(4, 2)"), std::string::npos);
  }
}

TEST(Activation, PointValues) {
  Tensor x({2}, {-1.5, 2.0});
  EXPECT_EQ(activation(x, Activation::kRelu), Tensor({2}, {0.0, 2.0}));
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(activation(Tensor({1}, {0.0}), Activation::kTanh)[0], 0.0);
}

TEST(Activation, SigmoidSymmetry) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-30, 30);
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
  }
}

TEST(Softmax, UniformRow) {
  Tensor p = softmax_rows(Tensor({1, 6}));
  for (double v : p.vec()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tensor p = softmax_rows(Tensor({1, 2}, {1000.0, 0.0}));
  EXPECT_TRUE(p.all_finite());
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Tensor x = random_tensor({4, 6}, rng, 1e3);
    Tensor p = softmax_rows(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        s += p.at(r, j);
        EXPECT_GE(p.at(r, j), 0.0);
        EXPECT_LE(p.at(r, j), 1.0);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    Tensor shifted = x;
    const double c = rng.uniform(-50, 50);
    for (auto& v : shifted.vec()) v += c;
    EXPECT_LT(max_abs_diff(softmax_rows(shifted), p), 1e-12);
  }
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  Tensor y = layer_norm(Tensor({1, 4}, {3, 3, 3, 3}), Tensor({4}, 1.0), Tensor({4}));
  for (double v : y.vec()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, ClosedFormStandardization) {
  Tensor y = layer_norm(Tensor({1, 3}, {1, 2, 3}), Tensor({3}, 1.0), Tensor({3}), 1e-12);
  EXPECT_NEAR(y[0], -std::sqrt(1.5), 1e-9);
  EXPECT_NEAR(y[1], 0.0, 1e-12);
  EXPECT_NEAR(y[2], std::sqrt(1.5), 1e-9);
}

TEST(LayerNorm, ZeroGammaGivesBeta) {
  Rng rng(5);
  Tensor beta = random_tensor({5}, rng);
  Tensor y = layer_norm(random_tensor({3, 5}, rng), Tensor({5}), beta);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y.at(r, j), beta[j]);
}

TEST(LayerNorm, StandardizesAndIgnoresRowShift) {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor x = random_tensor({3, 16}, rng, 5.0);
    Tensor y = layer_norm(x, Tensor({16}, 1.0), Tensor({16}));
    for (std::size_t r = 0; r < 3; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t j = 0; j < 16; ++j) mean += y.at(r, j) / 16.0;
      for (std::size_t j = 0; j < 16; ++j) var += (y.at(r, j) - mean) * (y.at(r, j) - mean) / 16.0;
      EXPECT_NEAR(mean, 0.0, 1e-12);
      EXPECT_NEAR(var, 1.0, 1e-2);  // eps = 1e-3 shrinks the variance slightly
    }
    Tensor shifted = x;
    for (auto& v : shifted.vec()) v += 42.0;
    EXPECT_LT(max_abs_diff(layer_norm(shifted, Tensor({16}, 1.0), Tensor({16})), y), 1e-9);
  }
}

TEST(FiniteDiff, Square) {
  auto f = [](const Tensor& x) { return x[0] * x[0]; };
  EXPECT_NEAR(finite_diff_grad(f, Tensor({1}, {3.0}))[0], 6.0, 1e-8);
}

TEST(FiniteDiff, SumGivesOnes) {
  Rng rng(2);
  auto f = [](const Tensor& x) {
    double s = 0.0;
    for (double v : x.vec()) s += v;
    return s;
  };
  Tensor g = finite_diff_grad(f, random_tensor({4, 3}, rng));
  for (double v : g.vec()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(FiniteDiff, NonFiniteEvaluationThrows) {
  auto f = [](const Tensor& x) { return std::log(x[0]); };
  EXPECT_THROW(finite_diff_grad(f, Tensor({1}, {0.0})), NumericError);
}

TEST(Rng, EqualSeedsEqualStreams) {
  Rng a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(77);
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, BelowIsInRange) {
  Rng rng(4);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[rng.below(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

}  // namespace
}  // namespace bigat
