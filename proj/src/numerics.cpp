// SPDX-License-Identifier: Apache-2.0
#include "bigat/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "bigat/error.hpp"

namespace bigat {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor activation(const Tensor& x, Activation kind) {
  Tensor y = x;
  switch (kind) {
    case Activation::kNone:
      break;
    case Activation::kSigmoid:
      for (auto& v : y.vec()) v = sigmoid(v);
      break;
    case Activation::kTanh:
      for (auto& v : y.vec()) v = std::tanh(v);
      break;
    case Activation::kRelu:
      for (auto& v : y.vec()) v = v > 0.0 ? v : 0.0;
      break;
  }
  return y;
}

Tensor activation_backward(const Tensor& y, const Tensor& grad_out, Activation kind) {
  if (y.shape() != grad_out.shape()) {
    throw ShapeError("activation_backward: output " + shape_str(y.shape()) + " vs grad " +
                     shape_str(grad_out.shape()));
  }
  Tensor g = grad_out;
  switch (kind) {
    case Activation::kNone:
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (y[i] <= 0.0) g[i] = 0.0;
      break;
  }
  return g;
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("softmax_rows: scalar input");
  Tensor y = x;
  const std::size_t c = x.shape().back();
  if (c == 0) return y;
  double* p = y.data().data();
  for (std::size_t r = 0; r < y.size() / c; ++r, p += c) {
    double mx = p[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, p[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(p[j] - mx);
      sum += p[j];
    }
    for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& p, const Tensor& grad_out) {
  if (p.shape() != grad_out.shape()) {
    throw ShapeError("softmax_rows_backward: shape mismatch " + shape_str(p.shape()) + " vs " +
                     shape_str(grad_out.shape()));
  }
  Tensor g({p.shape()});
  const std::size_t c = p.shape().back();
  for (std::size_t r = 0; r < p.size() / c; ++r) {
    const std::size_t o = r * c;
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += grad_out[o + j] * p[o + j];
    for (std::size_t j = 0; j < c; ++j) g[o + j] = p[o + j] * (grad_out[o + j] - dot);
  }
  return g;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (d == 0 || gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: gamma/beta width does not match " + shape_str(x.shape()));
  }
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  Tensor y = x;
  double* p = y.data().data();
  for (std::size_t r = 0; r < y.size() / d; ++r, p += d) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += p[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (p[j] - mean) * (p[j] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) p[j] = (p[j] - mean) * inv * gamma[j] + beta[j];
  }
  return y;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_relative_error(const Tensor& a, const Tensor& b, double floor) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_relative_error: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, relative_error(a[i], b[i], floor));
  return m;
}

}  // namespace bigat
