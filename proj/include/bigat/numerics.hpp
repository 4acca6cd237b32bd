// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "bigat/tensor.hpp"

namespace bigat {

enum class Activation { kNone, kSigmoid, kTanh, kRelu };

double sigmoid(double x);

/// Elementwise activation; same shape as the input.
Tensor activation(const Tensor& x, Activation kind);

/// Gradient through an activation given its *output* y and upstream grad.
Tensor activation_backward(const Tensor& y, const Tensor& grad_out, Activation kind);

/// Softmax over the last axis with max subtraction.
Tensor softmax_rows(const Tensor& x);

/// Backward of softmax_rows given its output p: p ⊙ (g − Σ g⊙p).
Tensor softmax_rows_backward(const Tensor& p, const Tensor& grad_out);

inline constexpr double kLayerNormEps = 1e-3;

/// Per-row standardization over the last axis followed by gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kLayerNormEps);

/// Central-difference gradient of a scalar function:
/// (f(x + h·e_i) − f(x − h·e_i)) / 2h for every coordinate.
/// Throws NumericError if any evaluation is non-finite.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h = 1e-5);

/// Relative error used by every gradient check in this project:
/// |a − b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);
double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-6);

}  // namespace bigat
