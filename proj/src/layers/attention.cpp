// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "bigat/error.hpp"
#include "bigat/layers.hpp"

namespace bigat {
namespace {

Tensor project(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor y({x.dim(0), w.dim(1)});
  gemm_nn(x.dim(0), w.dim(1), x.dim(1), x.data().data(), w.data().data(), y.data().data());
  add_row_bias(y, bias);
  return y;
}

void check_mha(const MhaParams& p) {
  const std::size_t d = p.model_dim(), hk = p.heads * p.key_dim;
  if (hk == 0 || p.wq.shape() != Shape{d, hk} || p.wk.shape() != Shape{d, hk} ||
      p.wv.shape() != Shape{d, hk} || p.wo.shape() != Shape{hk, d} || p.bq.size() != hk ||
      p.bk.size() != hk || p.bv.size() != hk || p.bo.size() != d) {
    throw ShapeError("mha: projection shapes inconsistent with heads=" +
                     std::to_string(p.heads) + " key_dim=" + std::to_string(p.key_dim));
  }
}

// Accumulates g[rows × cols] column sums into bias gradient.
void add_col_sums(const Tensor& g, Tensor& bias) {
  const std::size_t cols = bias.size();
  for (std::size_t r = 0; r < g.size() / cols; ++r)
    for (std::size_t j = 0; j < cols; ++j) bias[j] += g[r * cols + j];
}

}  // namespace

Forward<MhaCache> mha_self_forward(const MhaParams& p, const Tensor& x) {
  check_mha(p);
  const std::size_t D = p.model_dim();
  if (x.rank() != 3 || x.dim(2) != D) {
    throw ShapeError("mha: input " + shape_str(x.shape()) + " does not match model width " +
                     std::to_string(D));
  }
  const std::size_t b = x.dim(0), T = x.dim(1), H = p.heads, K = p.key_dim, HK = H * K;
  const double scale = 1.0 / std::sqrt(static_cast<double>(K));

  MhaCache c;
  c.batch = b;
  c.steps = T;
  c.x = x.reshaped({b * T, D});
  c.q = project(c.x, p.wq, p.bq);
  c.k = project(c.x, p.wk, p.bk);
  c.v = project(c.x, p.wv, p.bv);
  c.attn = Tensor({b, H, T, T});
  c.concat = Tensor({b * T, HK});

  std::vector<double> row(T);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < H; ++h) {
      double* A = c.attn.data().data() + (bi * H + h) * T * T;
      for (std::size_t i = 0; i < T; ++i) {
        const double* qi = c.q.data().data() + (bi * T + i) * HK + h * K;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < T; ++j) {
          const double* kj = c.k.data().data() + (bi * T + j) * HK + h * K;
          double s = 0.0;
          for (std::size_t e = 0; e < K; ++e) s += qi[e] * kj[e];
          row[j] = s * scale;
          mx = std::max(mx, row[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        double* out = c.concat.data().data() + (bi * T + i) * HK + h * K;
        for (std::size_t j = 0; j < T; ++j) {
          const double a = row[j] / sum;
          A[i * T + j] = a;
          const double* vj = c.v.data().data() + (bi * T + j) * HK + h * K;
          for (std::size_t e = 0; e < K; ++e) out[e] += a * vj[e];
        }
      }
    }

  Tensor y = project(c.concat, p.wo, p.bo);
  y.reshape({b, T, D});
  return {std::move(y), std::move(c)};
}

Backward<MhaParams> mha_backward(const MhaParams& p, const MhaCache& c, const Tensor& grad_out) {
  check_mha(p);
  const std::size_t b = c.batch, T = c.steps, D = p.model_dim(), H = p.heads, K = p.key_dim,
                    HK = H * K;
  if (grad_out.shape() != Shape{b, T, D}) {
    throw ShapeError("mha backward: grad " + shape_str(grad_out.shape()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(K));
  Backward<MhaParams> res{Tensor(), MhaParams::zeros(D, H, K)};
  MhaParams& gp = res.grad_params;
  const std::size_t rows = b * T;
  const double* go = grad_out.data().data();

  // Output projection.
  gemm_tn(HK, D, rows, c.concat.data().data(), go, gp.wo.data().data());
  add_col_sums(grad_out, gp.bo);
  Tensor dconcat({rows, HK});
  gemm_nt(rows, HK, D, go, p.wo.data().data(), dconcat.data().data());

  Tensor dq({rows, HK}), dk({rows, HK}), dv({rows, HK});
  std::vector<double> dA(T), dS(T);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < H; ++h) {
      const double* A = c.attn.data().data() + (bi * H + h) * T * T;
      for (std::size_t i = 0; i < T; ++i) {
        const double* dOi = dconcat.data().data() + (bi * T + i) * HK + h * K;
        double dot = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
          const double* vj = c.v.data().data() + (bi * T + j) * HK + h * K;
          double* dvj = dv.data().data() + (bi * T + j) * HK + h * K;
          const double a = A[i * T + j];
          double s = 0.0;
          for (std::size_t e = 0; e < K; ++e) {
            s += dOi[e] * vj[e];
            dvj[e] += a * dOi[e];
          }
          dA[j] = s;
          dot += s * a;
        }
        for (std::size_t j = 0; j < T; ++j) dS[j] = A[i * T + j] * (dA[j] - dot) * scale;
        const double* qi = c.q.data().data() + (bi * T + i) * HK + h * K;
        double* dqi = dq.data().data() + (bi * T + i) * HK + h * K;
        for (std::size_t j = 0; j < T; ++j) {
          const double* kj = c.k.data().data() + (bi * T + j) * HK + h * K;
          double* dkj = dk.data().data() + (bi * T + j) * HK + h * K;
          const double s = dS[j];
          for (std::size_t e = 0; e < K; ++e) {
            dqi[e] += s * kj[e];
            dkj[e] += s * qi[e];
          }
        }
      }
    }

  const double* xp = c.x.data().data();
  gemm_tn(D, HK, rows, xp, dq.data().data(), gp.wq.data().data());
  gemm_tn(D, HK, rows, xp, dk.data().data(), gp.wk.data().data());
  gemm_tn(D, HK, rows, xp, dv.data().data(), gp.wv.data().data());
  add_col_sums(dq, gp.bq);
  add_col_sums(dk, gp.bk);
  add_col_sums(dv, gp.bv);

  Tensor dx({rows, D});
  gemm_nt(rows, D, HK, dq.data().data(), p.wq.data().data(), dx.data().data());
  gemm_nt(rows, D, HK, dk.data().data(), p.wk.data().data(), dx.data().data());
  gemm_nt(rows, D, HK, dv.data().data(), p.wv.data().data(), dx.data().data());
  dx.reshape({b, T, D});
  res.grad_in = std::move(dx);
  return res;
}

}  // namespace bigat
