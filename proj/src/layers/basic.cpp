// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "bigat/error.hpp"
#include "bigat/layers.hpp"

namespace bigat {

Forward<LayerNormCache> layer_norm_forward(const LayerNormParams& p, const Tensor& x) {
  const std::size_t d = p.gamma.size();
  if (x.rank() == 0 || x.shape().back() != d || p.beta.size() != d) {
    throw ShapeError("layer_norm: input " + shape_str(x.shape()) + " vs width " +
                     std::to_string(d));
  }
  const std::size_t rows = x.size() / d;
  Forward<LayerNormCache> r{Tensor(x.shape()), {Tensor(x.shape()), std::vector<double>(rows)}};
  for (std::size_t row = 0; row < rows; ++row) {
    const double* xp = x.data().data() + row * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xp[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xp[j] - mean) * (xp[j] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + p.eps);
    r.cache.inv_std[row] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xp[j] - mean) * inv;
      r.cache.xhat[row * d + j] = xh;
      r.out[row * d + j] = xh * p.gamma[j] + p.beta[j];
    }
  }
  return r;
}

Backward<LayerNormParams> layer_norm_backward(const LayerNormParams& p,
                                              const LayerNormCache& cache,
                                              const Tensor& grad_out) {
  const std::size_t d = p.gamma.size();
  if (grad_out.shape() != cache.xhat.shape()) {
    throw ShapeError("layer_norm backward: grad " + shape_str(grad_out.shape()) + " vs " +
                     shape_str(cache.xhat.shape()));
  }
  Backward<LayerNormParams> r{Tensor(grad_out.shape()), {Tensor({d}), Tensor({d}), p.eps}};
  const std::size_t rows = grad_out.size() / d;
  const double inv_d = 1.0 / static_cast<double>(d);
  std::vector<double> dxhat(d);
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t o = row * d;
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = grad_out[o + j];
      r.grad_params.gamma[j] += g * cache.xhat[o + j];
      r.grad_params.beta[j] += g;
      dxhat[j] = g * p.gamma[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * cache.xhat[o + j];
    }
    mean_dxhat *= inv_d;
    mean_dxhat_xhat *= inv_d;
    for (std::size_t j = 0; j < d; ++j) {
      r.grad_in[o + j] =
          cache.inv_std[row] * (dxhat[j] - mean_dxhat - cache.xhat[o + j] * mean_dxhat_xhat);
    }
  }
  return r;
}

Forward<DropoutCache> dropout_apply(const Tensor& x, double rate, Mode mode, Rng* rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return {x, DropoutCache{}};
  if (rng == nullptr) throw ConfigError("dropout in train mode requires an rng");
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng->uniform() < rate ? 0.0 : keep_scale;
    y[i] = x[i] * mask[i];
  }
  return {y, DropoutCache{mask}};
}

Tensor dropout_backward(const DropoutCache& cache, const Tensor& grad_out) {
  if (cache.mask.empty()) return grad_out;
  if (cache.mask.shape() != grad_out.shape()) {
    throw ShapeError("dropout backward: grad " + shape_str(grad_out.shape()) + " vs mask " +
                     shape_str(cache.mask.shape()));
  }
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= cache.mask[i];
  return g;
}

Tensor flatten(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("flatten: expected rank 3, got " + shape_str(x.shape()));
  return x.reshaped({x.dim(0), x.dim(1) * x.dim(2)});
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw ShapeError("concat_last: incompatible " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), p = a.dim(1), q = b.dim(1);
  Tensor out({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < q; ++j) out.at(i, p + j) = b.at(i, j);
  }
  return out;
}

std::pair<Tensor, Tensor> split_last(const Tensor& g, std::size_t left_width) {
  if (g.rank() != 2 || left_width > g.dim(1)) {
    throw ShapeError("split_last: cannot split " + shape_str(g.shape()) + " at " +
                     std::to_string(left_width));
  }
  const std::size_t n = g.dim(0), p = left_width, q = g.dim(1) - left_width;
  Tensor a({n, p}), b({n, q});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) a.at(i, j) = g.at(i, j);
    for (std::size_t j = 0; j < q; ++j) b.at(i, j) = g.at(i, p + j);
  }
  return {a, b};
}

namespace {

template <typename P, typename C>
LayerGrads dispatch(const P& params, const C& cache, const Tensor& grad_out) {
  if constexpr (std::is_same_v<P, DenseParams> && std::is_same_v<C, DenseCache>) {
    auto r = dense_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, GruParams> && std::is_same_v<C, GruCache>) {
    auto r = gru_sequence_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, BiGruParams> && std::is_same_v<C, BiGruCache>) {
    auto r = bigru_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, LstmParams> && std::is_same_v<C, LstmCache>) {
    auto r = lstm_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, MhaParams> && std::is_same_v<C, MhaCache>) {
    auto r = mha_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, LayerNormParams> && std::is_same_v<C, LayerNormCache>) {
    auto r = layer_norm_backward(params, cache, grad_out);
    return {std::move(r.grad_in), std::move(r.grad_params)};
  } else if constexpr (std::is_same_v<P, NoParams> && std::is_same_v<C, DropoutCache>) {
    return {dropout_backward(cache, grad_out), NoParams{}};
  } else {
    throw Error("layer_backward: cache does not belong to this layer kind");
  }
}

}  // namespace

LayerGrads layer_backward(const LayerParams& params, const LayerCache& cache,
                          const Tensor& grad_out) {
  return std::visit([&](const auto& p, const auto& c) { return dispatch(p, c, grad_out); },
                    params, cache);
}

}  // namespace bigat
