// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "bigat/error.hpp"
#include "bigat/layers.hpp"

namespace bigat {

DenseParams DenseParams::zeros(std::size_t in, std::size_t out) {
  return {Tensor({in, out}), Tensor({out})};
}
NamedTensorRefs DenseParams::tensors() { return {{"kernel", &w}, {"bias", &b}}; }
NamedTensorCRefs DenseParams::tensors() const { return {{"kernel", &w}, {"bias", &b}}; }

GruParams GruParams::zeros(std::size_t d, std::size_t n) {
  return {Tensor({d, 3 * n}), Tensor({n, 3 * n}), Tensor({3 * n}), Tensor({3 * n})};
}
NamedTensorRefs GruParams::tensors() {
  return {{"kernel", &w_in}, {"recurrent_kernel", &w_rec}, {"bias", &b_in},
          {"recurrent_bias", &b_rec}};
}
NamedTensorCRefs GruParams::tensors() const {
  return {{"kernel", &w_in}, {"recurrent_kernel", &w_rec}, {"bias", &b_in},
          {"recurrent_bias", &b_rec}};
}

BiGruParams BiGruParams::zeros(std::size_t d, std::size_t n) {
  return {GruParams::zeros(d, n), GruParams::zeros(d, n)};
}
NamedTensorRefs BiGruParams::tensors() {
  NamedTensorRefs out;
  for (auto& [name, t] : forward.tensors()) out.emplace_back("forward/" + name, t);
  for (auto& [name, t] : backward.tensors()) out.emplace_back("backward/" + name, t);
  return out;
}
NamedTensorCRefs BiGruParams::tensors() const {
  NamedTensorCRefs out;
  for (auto& [name, t] : forward.tensors()) out.emplace_back("forward/" + name, t);
  for (auto& [name, t] : backward.tensors()) out.emplace_back("backward/" + name, t);
  return out;
}

LstmParams LstmParams::zeros(std::size_t d, std::size_t n) {
  return {Tensor({d, 4 * n}), Tensor({n, 4 * n}), Tensor({4 * n})};
}
NamedTensorRefs LstmParams::tensors() {
  return {{"kernel", &w_in}, {"recurrent_kernel", &w_rec}, {"bias", &b}};
}
NamedTensorCRefs LstmParams::tensors() const {
  return {{"kernel", &w_in}, {"recurrent_kernel", &w_rec}, {"bias", &b}};
}

MhaParams MhaParams::zeros(std::size_t d, std::size_t heads, std::size_t key_dim) {
  const std::size_t hk = heads * key_dim;
  MhaParams p;
  p.heads = heads;
  p.key_dim = key_dim;
  p.wq = Tensor({d, hk});
  p.bq = Tensor({hk});
  p.wk = Tensor({d, hk});
  p.bk = Tensor({hk});
  p.wv = Tensor({d, hk});
  p.bv = Tensor({hk});
  p.wo = Tensor({hk, d});
  p.bo = Tensor({d});
  return p;
}
NamedTensorRefs MhaParams::tensors() {
  return {{"query/kernel", &wq}, {"query/bias", &bq}, {"key/kernel", &wk},
          {"key/bias", &bk},     {"value/kernel", &wv}, {"value/bias", &bv},
          {"output/kernel", &wo}, {"output/bias", &bo}};
}
NamedTensorCRefs MhaParams::tensors() const {
  return {{"query/kernel", &wq}, {"query/bias", &bq}, {"key/kernel", &wk},
          {"key/bias", &bk},     {"value/kernel", &wv}, {"value/bias", &bv},
          {"output/kernel", &wo}, {"output/bias", &bo}};
}

LayerNormParams LayerNormParams::identity(std::size_t d, double eps) {
  return {Tensor({d}, 1.0), Tensor({d}), eps};
}
NamedTensorRefs LayerNormParams::tensors() { return {{"gamma", &gamma}, {"beta", &beta}}; }
NamedTensorCRefs LayerNormParams::tensors() const {
  return {{"gamma", &gamma}, {"beta", &beta}};
}

std::size_t param_count(const LayerParams& p) {
  return std::visit(
      [](const auto& params) {
        std::size_t n = 0;
        for (const auto& [name, t] : params.tensors()) n += t->size();
        return n;
      },
      p);
}

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.vec()) v = rng.uniform(-limit, limit);
}

void orthogonal_init(Tensor& w, Rng& rng) {
  if (w.rank() != 2) throw ShapeError("orthogonal_init: expected rank 2");
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  // Orthonormalize the `small` vectors of length `big`, then lay them out
  // as rows (rows ≤ cols) or columns (rows > cols).
  const std::size_t small = std::min(rows, cols), big = std::max(rows, cols);
  std::vector<std::vector<double>> basis(small, std::vector<double>(big));
  for (std::size_t i = 0; i < small; ++i) {
    auto& v = basis[i];
    double norm = 0.0;
    do {
      for (auto& e : v) e = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0.0;
        for (std::size_t e = 0; e < big; ++e) dot += v[e] * basis[j][e];
        for (std::size_t e = 0; e < big; ++e) v[e] -= dot * basis[j][e];
      }
      norm = 0.0;
      for (double e : v) norm += e * e;
      norm = std::sqrt(norm);
    } while (norm < 1e-10);
    for (auto& e : v) e /= norm;
  }
  for (std::size_t i = 0; i < small; ++i)
    for (std::size_t e = 0; e < big; ++e) {
      if (rows <= cols)
        w.at(i, e) = basis[i][e];
      else
        w.at(e, i) = basis[i][e];
    }
}

}  // namespace bigat
