// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "bigat/error.hpp"
#include "bigat/training.hpp"

namespace bigat {
namespace {

void check_pair(const Tensor& probs, const Tensor& onehot) {
  if (probs.rank() != 2 || probs.shape() != onehot.shape() || probs.dim(0) == 0) {
    throw ShapeError("loss: probabilities " + shape_str(probs.shape()) + " vs targets " +
                     shape_str(onehot.shape()));
  }
}

}  // namespace

LossResult cce_loss(const Tensor& probs, const Tensor& onehot) {
  check_pair(probs, onehot);
  const std::size_t b = probs.dim(0), c = probs.dim(1);
  const double inv_b = 1.0 / static_cast<double>(b);
  LossResult r{0.0, Tensor(probs.shape())};
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double y = onehot.at(i, j);
      if (y == 0.0) continue;
      const double p = probs.at(i, j);
      const double pc = std::clamp(p, kProbClamp, 1.0);
      r.loss -= y * std::log(pc) * inv_b;
      if (p > kProbClamp) r.grad_probs.at(i, j) = -y / p * inv_b;
    }
  return r;
}

LossResult focal_loss(const Tensor& probs, const Tensor& onehot, double gamma,
                      const std::vector<double>& alpha) {
  check_pair(probs, onehot);
  if (gamma < 0.0) throw ConfigError("focal gamma must be non-negative");
  const std::size_t b = probs.dim(0), c = probs.dim(1);
  if (!alpha.empty() && alpha.size() != c) {
    throw ConfigError("focal alpha needs one weight per class (" + std::to_string(c) + ")");
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  LossResult r{0.0, Tensor(probs.shape())};
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double y = onehot.at(i, j);
      if (y == 0.0) continue;
      const double a = alpha.empty() ? 1.0 : alpha[j];
      const double p = probs.at(i, j);
      const double pc = std::clamp(p, kProbClamp, 1.0);
      const double q = 1.0 - pc;
      const double w = std::pow(q, gamma);
      const double logp = std::log(pc);
      r.loss -= a * y * w * logp * inv_b;
      if (p > kProbClamp) {
        // d/dp [−(1−p)^γ log p] = γ(1−p)^(γ−1) log p − (1−p)^γ / p
        double dw = 0.0;
        if (gamma != 0.0 && q > 0.0) dw = gamma * std::pow(q, gamma - 1.0) * logp;
        r.grad_probs.at(i, j) = a * y * (dw - w / p) * inv_b;
      }
    }
  return r;
}

double evaluate_loss(const Tensor& probs, const std::vector<int>& labels, const TrainConfig& cfg) {
  const Tensor targets = one_hot(labels, probs.dim(1));
  return cfg.loss == LossKind::kFocal ? focal_loss(probs, targets, cfg.focal_gamma, cfg.focal_alpha).loss
                                      : cce_loss(probs, targets).loss;
}

}  // namespace bigat
