// SPDX-License-Identifier: Apache-2.0
#include "bigat/error.hpp"
#include "bigat/layers.hpp"

namespace bigat {

Forward<DenseCache> dense_forward(const DenseParams& p, const Tensor& x, DenseActivation act) {
  if (x.rank() < 2 || x.shape().back() != p.in()) {
    throw ShapeError("dense: input " + shape_str(x.shape()) + " does not match kernel " +
                     shape_str(p.w.shape()));
  }
  const std::size_t rows = x.size() / p.in();
  Shape out_shape = x.shape();
  out_shape.back() = p.out();
  Tensor y(out_shape);
  gemm_nn(rows, p.out(), p.in(), x.data().data(), p.w.data().data(), y.data().data());
  add_row_bias(y, p.b);
  switch (act) {
    case DenseActivation::kNone:
      break;
    case DenseActivation::kRelu:
      y = activation(y, Activation::kRelu);
      break;
    case DenseActivation::kSoftmax:
      y = softmax_rows(y);
      break;
  }
  return {y, DenseCache{x, y, act}};
}

Backward<DenseParams> dense_backward(const DenseParams& p, const DenseCache& cache,
                                     const Tensor& grad_out) {
  if (grad_out.shape() != cache.y.shape()) {
    throw ShapeError("dense backward: grad " + shape_str(grad_out.shape()) + " vs output " +
                     shape_str(cache.y.shape()));
  }
  Tensor g;
  switch (cache.act) {
    case DenseActivation::kNone:
      g = grad_out;
      break;
    case DenseActivation::kRelu:
      g = activation_backward(cache.y, grad_out, Activation::kRelu);
      break;
    case DenseActivation::kSoftmax:
      g = softmax_rows_backward(cache.y, grad_out);
      break;
  }
  const std::size_t rows = g.size() / p.out();
  Backward<DenseParams> r{Tensor(cache.x.shape()), DenseParams::zeros(p.in(), p.out())};
  gemm_tn(p.in(), p.out(), rows, cache.x.data().data(), g.data().data(),
          r.grad_params.w.data().data());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < p.out(); ++j) r.grad_params.b[j] += g[i * p.out() + j];
  gemm_nt(rows, p.in(), p.out(), g.data().data(), p.w.data().data(),
          r.grad_in.data().data());
  return r;
}

}  // namespace bigat
