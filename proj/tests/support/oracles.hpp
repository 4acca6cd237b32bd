// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations for tests. Nothing here calls into the
// code paths it checks.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "bigat/numerics.hpp"
#include "bigat/rng.hpp"
#include "bigat/tensor.hpp"

namespace bigat::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (auto& v : t.vec()) v = rng.uniform(-scale, scale);
  return t;
}

/// Plain triple loop, i-j-k order.
inline Tensor matmul_triple_loop(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  return c;
}

/// Σ out ⊙ weights, the scalar probe used for gradient checks.
inline double weighted_sum(const Tensor& out, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

/// Confusion counts by scanning every (true, pred) pair of class ids.
inline std::vector<std::vector<std::size_t>> confusion_by_pairs(const std::vector<int>& y_true,
                                                                const std::vector<int>& y_pred,
                                                                int c) {
  std::vector<std::vector<std::size_t>> m(c, std::vector<std::size_t>(c, 0));
  for (int t = 0; t < c; ++t)
    for (int p = 0; p < c; ++p)
      for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == t && y_pred[i] == p) ++m[t][p];
  return m;
}

/// AUC = P(score⁺ > score⁻) + ½ P(tie), over all positive/negative pairs.
inline double auc_pairwise(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Kendall tau-a between two score vectors over the given items.
inline double kendall_tau(const std::vector<double>& a, const std::vector<double>& b,
                          const std::vector<std::size_t>& items) {
  double concordant = 0.0, discordant = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double s = (a[items[i]] - a[items[j]]) * (b[items[i]] - b[items[j]]);
      if (s > 0) concordant += 1;
      if (s < 0) discordant += 1;
    }
  const double pairs = items.size() * (items.size() - 1) / 2.0;
  return (concordant - discordant) / pairs;
}

}  // namespace bigat::testing
