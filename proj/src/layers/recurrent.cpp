// SPDX-License-Identifier: Apache-2.0
//
// GRU (reset-after, dual bias) and LSTM sequences with full BPTT.
//
//   z = σ(x·Wz + bz + h·Uz + cz)
//   r = σ(x·Wr + br + h·Ur + cr)
//   ĥ = tanh(x·Wh + bh + r ⊙ (h·Uh + ch))
//   h' = (1 − z) ⊙ h + z ⊙ ĥ
//
// Internally everything runs time-major ([T × b × ·]) in processing order.
#include <cmath>

#include "bigat/error.hpp"
#include "bigat/layers.hpp"

namespace bigat {
namespace {

// [b × T × d] → [T × b × d], optionally reversing time.
std::vector<double> to_time_major(const Tensor& x, bool reverse) {
  const std::size_t b = x.dim(0), T = x.dim(1), d = x.dim(2);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t tt = reverse ? T - 1 - t : t;
      const double* src = x.data().data() + (i * T + t) * d;
      double* dst = out.data() + (tt * b + i) * d;
      for (std::size_t k = 0; k < d; ++k) dst[k] = src[k];
    }
  return out;
}

// Inverse of to_time_major.
Tensor from_time_major(const double* tm, std::size_t T, std::size_t b, std::size_t d,
                       bool reverse) {
  Tensor out({b, T, d});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t tt = reverse ? T - 1 - t : t;
      const double* src = tm + (tt * b + i) * d;
      double* dst = out.data().data() + (i * T + t) * d;
      for (std::size_t k = 0; k < d; ++k) dst[k] = src[k];
    }
  return out;
}

void check_sequence_input(const Tensor& x, std::size_t d, const char* who) {
  if (x.rank() != 3 || x.dim(2) != d) {
    throw ShapeError(std::string(who) + ": input " + shape_str(x.shape()) +
                     " does not match input width " + std::to_string(d));
  }
}

void check_gru(const GruParams& p) {
  const std::size_t n = p.units(), d = p.input_dim();
  if (p.w_in.shape() != Shape{d, 3 * n} || p.w_rec.shape() != Shape{n, 3 * n} ||
      p.b_in.size() != 3 * n || p.b_rec.size() != 3 * n) {
    throw ShapeError("gru: inconsistent parameter shapes");
  }
}

}  // namespace

Tensor gru_cell(const GruParams& p, const Tensor& x, const Tensor& h_prev) {
  check_gru(p);
  const std::size_t b = x.dim(0), n = p.units();
  if (h_prev.shape() != Shape{b, n}) throw ShapeError("gru_cell: bad hidden state shape");
  // One step from an arbitrary state: evaluate the gates directly.
  Tensor xw = matmul(x, p.w_in);
  add_row_bias(xw, p.b_in);
  Tensor hu = matmul(h_prev, p.w_rec);
  add_row_bias(hu, p.b_rec);
  Tensor h({b, n});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double z = sigmoid(xw.at(i, j) + hu.at(i, j));
      const double r = sigmoid(xw.at(i, n + j) + hu.at(i, n + j));
      const double hh = std::tanh(xw.at(i, 2 * n + j) + r * hu.at(i, 2 * n + j));
      h.at(i, j) = (1.0 - z) * h_prev.at(i, j) + z * hh;
    }
  return h;
}

Forward<GruCache> gru_sequence_forward(const GruParams& p, const Tensor& x, Direction dir) {
  check_gru(p);
  check_sequence_input(x, p.input_dim(), "gru");
  const std::size_t b = x.dim(0), T = x.dim(1), d = x.dim(2), n = p.units(), n3 = 3 * n;
  const bool rev = dir == Direction::kBackward;

  GruCache c;
  c.direction = dir;
  c.batch = b;
  c.steps = T;
  c.input_dim = d;
  c.units = n;
  c.x = to_time_major(x, rev);
  c.h.assign((T + 1) * b * n, 0.0);
  c.z.resize(T * b * n);
  c.r.resize(T * b * n);
  c.hh.resize(T * b * n);
  c.huh.resize(T * b * n);

  std::vector<double> xw(T * b * n3, 0.0);
  gemm_nn(T * b, n3, d, c.x.data(), p.w_in.data().data(), xw.data());
  for (std::size_t row = 0; row < T * b; ++row)
    for (std::size_t j = 0; j < n3; ++j) xw[row * n3 + j] += p.b_in[j];

  std::vector<double> hu(b * n3);
  for (std::size_t t = 0; t < T; ++t) {
    const double* hprev = c.h.data() + t * b * n;
    double* hnext = c.h.data() + (t + 1) * b * n;
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < n3; ++j) hu[i * n3 + j] = p.b_rec[j];
    gemm_nn(b, n3, n, hprev, p.w_rec.data().data(), hu.data());
    for (std::size_t i = 0; i < b; ++i) {
      const double* xr = xw.data() + (t * b + i) * n3;
      const double* hr = hu.data() + i * n3;
      const std::size_t o = (t * b + i) * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double z = sigmoid(xr[j] + hr[j]);
        const double r = sigmoid(xr[n + j] + hr[n + j]);
        const double huh = hr[2 * n + j];
        const double hh = std::tanh(xr[2 * n + j] + r * huh);
        c.z[o + j] = z;
        c.r[o + j] = r;
        c.hh[o + j] = hh;
        c.huh[o + j] = huh;
        hnext[i * n + j] = (1.0 - z) * hprev[i * n + j] + z * hh;
      }
    }
  }
  Tensor out = from_time_major(c.h.data() + b * n, T, b, n, rev);
  return {std::move(out), std::move(c)};
}

Backward<GruParams> gru_sequence_backward(const GruParams& p, const GruCache& c,
                                          const Tensor& grad_out) {
  const std::size_t b = c.batch, T = c.steps, d = c.input_dim, n = c.units, n3 = 3 * n;
  if (grad_out.shape() != Shape{b, T, n} || p.units() != n || p.input_dim() != d) {
    throw ShapeError("gru backward: grad " + shape_str(grad_out.shape()) +
                     " does not match cached forward");
  }
  const bool rev = c.direction == Direction::kBackward;
  const std::vector<double> g = to_time_major(grad_out, rev);

  Backward<GruParams> res{Tensor(), GruParams::zeros(d, n)};
  GruParams& gp = res.grad_params;
  std::vector<double> dxw(T * b * n3, 0.0);
  std::vector<double> dh_next(b * n, 0.0);
  std::vector<double> dhu(b * n3);
  std::vector<double> dh(b * n);

  for (std::size_t t = T; t-- > 0;) {
    const double* hprev = c.h.data() + t * b * n;
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t o = (t * b + i) * n;
      double* dx_row = dxw.data() + (t * b + i) * n3;
      double* du_row = dhu.data() + i * n3;
      for (std::size_t j = 0; j < n; ++j) {
        const double dht = g[o + j] + dh_next[i * n + j];
        const double z = c.z[o + j], r = c.r[o + j], hh = c.hh[o + j];
        const double dz = dht * (hh - hprev[i * n + j]);
        const double dahh = dht * z * (1.0 - hh * hh);
        const double dr = dahh * c.huh[o + j];
        const double daz = dz * z * (1.0 - z);
        const double dar = dr * r * (1.0 - r);
        dx_row[j] = daz;
        dx_row[n + j] = dar;
        dx_row[2 * n + j] = dahh;
        du_row[j] = daz;
        du_row[n + j] = dar;
        du_row[2 * n + j] = dahh * r;
        dh[i * n + j] = dht * (1.0 - z);
      }
    }
    gemm_tn(n, n3, b, hprev, dhu.data(), gp.w_rec.data().data());
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < n3; ++j) gp.b_rec[j] += dhu[i * n3 + j];
    gemm_nt(b, n, n3, dhu.data(), p.w_rec.data().data(), dh.data());
    dh_next.swap(dh);
  }

  gemm_tn(d, n3, T * b, c.x.data(), dxw.data(), gp.w_in.data().data());
  for (std::size_t row = 0; row < T * b; ++row)
    for (std::size_t j = 0; j < n3; ++j) gp.b_in[j] += dxw[row * n3 + j];
  std::vector<double> dx(T * b * d, 0.0);
  gemm_nt(T * b, d, n3, dxw.data(), p.w_in.data().data(), dx.data());
  res.grad_in = from_time_major(dx.data(), T, b, d, rev);
  return res;
}

Forward<BiGruCache> bigru_forward(const BiGruParams& p, const Tensor& x) {
  if (p.forward.units() != p.backward.units() ||
      p.forward.input_dim() != p.backward.input_dim()) {
    throw ShapeError("bigru: forward and backward parameter shapes disagree");
  }
  auto f = gru_sequence_forward(p.forward, x, Direction::kForward);
  auto bw = gru_sequence_forward(p.backward, x, Direction::kBackward);
  const std::size_t b = x.dim(0), T = x.dim(1), n = p.forward.units();
  Tensor out({b, T, 2 * n});
  for (std::size_t i = 0; i < b * T; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out[i * 2 * n + j] = f.out[i * n + j];
      out[i * 2 * n + n + j] = bw.out[i * n + j];
    }
  return {std::move(out), BiGruCache{std::move(f.cache), std::move(bw.cache)}};
}

Backward<BiGruParams> bigru_backward(const BiGruParams& p, const BiGruCache& cache,
                                     const Tensor& grad_out) {
  const std::size_t b = cache.forward.batch, T = cache.forward.steps, n = cache.forward.units;
  if (grad_out.shape() != Shape{b, T, 2 * n}) {
    throw ShapeError("bigru backward: grad " + shape_str(grad_out.shape()));
  }
  Tensor gf({b, T, n}), gb({b, T, n});
  for (std::size_t i = 0; i < b * T; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      gf[i * n + j] = grad_out[i * 2 * n + j];
      gb[i * n + j] = grad_out[i * 2 * n + n + j];
    }
  auto rf = gru_sequence_backward(p.forward, cache.forward, gf);
  auto rb = gru_sequence_backward(p.backward, cache.backward, gb);
  add_inplace(rf.grad_in, rb.grad_in);
  return {std::move(rf.grad_in),
          BiGruParams{std::move(rf.grad_params), std::move(rb.grad_params)}};
}

Forward<LstmCache> lstm_forward(const LstmParams& p, const Tensor& x, bool return_sequences) {
  const std::size_t n = p.units(), d = p.input_dim(), n4 = 4 * n;
  if (p.w_in.shape() != Shape{d, n4} || p.w_rec.shape() != Shape{n, n4} || p.b.size() != n4) {
    throw ShapeError("lstm: inconsistent parameter shapes");
  }
  check_sequence_input(x, d, "lstm");
  const std::size_t b = x.dim(0), T = x.dim(1);

  LstmCache c;
  c.return_sequences = return_sequences;
  c.batch = b;
  c.steps = T;
  c.input_dim = d;
  c.units = n;
  c.x = to_time_major(x, false);
  c.h.assign((T + 1) * b * n, 0.0);
  c.c.assign((T + 1) * b * n, 0.0);
  c.gates.assign(T * b * n4, 0.0);

  for (std::size_t row = 0; row < T * b; ++row)
    for (std::size_t j = 0; j < n4; ++j) c.gates[row * n4 + j] = p.b[j];
  gemm_nn(T * b, n4, d, c.x.data(), p.w_in.data().data(), c.gates.data());

  for (std::size_t t = 0; t < T; ++t) {
    double* a = c.gates.data() + t * b * n4;
    const double* hprev = c.h.data() + t * b * n;
    const double* cprev = c.c.data() + t * b * n;
    double* hnext = c.h.data() + (t + 1) * b * n;
    double* cnext = c.c.data() + (t + 1) * b * n;
    gemm_nn(b, n4, n, hprev, p.w_rec.data().data(), a);
    for (std::size_t i = 0; i < b; ++i) {
      double* ar = a + i * n4;
      for (std::size_t j = 0; j < n; ++j) {
        const double ig = sigmoid(ar[j]);
        const double fg = sigmoid(ar[n + j]);
        const double gg = std::tanh(ar[2 * n + j]);
        const double og = sigmoid(ar[3 * n + j]);
        ar[j] = ig;
        ar[n + j] = fg;
        ar[2 * n + j] = gg;
        ar[3 * n + j] = og;
        const double cv = fg * cprev[i * n + j] + ig * gg;
        cnext[i * n + j] = cv;
        hnext[i * n + j] = og * std::tanh(cv);
      }
    }
  }

  Tensor out;
  if (return_sequences) {
    out = from_time_major(c.h.data() + b * n, T, b, n, false);
  } else {
    out = Tensor({b, n});
    const double* last = c.h.data() + T * b * n;
    for (std::size_t i = 0; i < b * n; ++i) out[i] = last[i];
  }
  return {std::move(out), std::move(c)};
}

Backward<LstmParams> lstm_backward(const LstmParams& p, const LstmCache& c,
                                   const Tensor& grad_out) {
  const std::size_t b = c.batch, T = c.steps, d = c.input_dim, n = c.units, n4 = 4 * n;
  const Shape expected = c.return_sequences ? Shape{b, T, n} : Shape{b, n};
  if (grad_out.shape() != expected || p.units() != n || p.input_dim() != d) {
    throw ShapeError("lstm backward: grad " + shape_str(grad_out.shape()) +
                     " does not match cached forward " + shape_str(expected));
  }
  std::vector<double> g;
  if (c.return_sequences) g = to_time_major(grad_out, false);

  Backward<LstmParams> res{Tensor(), LstmParams::zeros(d, n)};
  LstmParams& gp = res.grad_params;
  std::vector<double> da(T * b * n4, 0.0);
  std::vector<double> dh_next(b * n, 0.0), dc_next(b * n, 0.0), dh(b * n);

  for (std::size_t t = T; t-- > 0;) {
    const double* gates = c.gates.data() + t * b * n4;
    const double* cprev = c.c.data() + t * b * n;
    const double* ccur = c.c.data() + (t + 1) * b * n;
    const double* hprev = c.h.data() + t * b * n;
    double* dat = da.data() + t * b * n4;
    for (std::size_t i = 0; i < b; ++i) {
      const double* gr = gates + i * n4;
      double* dr = dat + i * n4;
      for (std::size_t j = 0; j < n; ++j) {
        double dht = dh_next[i * n + j];
        if (c.return_sequences)
          dht += g[(t * b + i) * n + j];
        else if (t == T - 1)
          dht += grad_out[i * n + j];
        const double ig = gr[j], fg = gr[n + j], gg = gr[2 * n + j], og = gr[3 * n + j];
        const double tc = std::tanh(ccur[i * n + j]);
        const double dct = dht * og * (1.0 - tc * tc) + dc_next[i * n + j];
        dr[j] = dct * gg * ig * (1.0 - ig);
        dr[n + j] = dct * cprev[i * n + j] * fg * (1.0 - fg);
        dr[2 * n + j] = dct * ig * (1.0 - gg * gg);
        dr[3 * n + j] = dht * tc * og * (1.0 - og);
        dc_next[i * n + j] = dct * fg;
        dh[i * n + j] = 0.0;
      }
    }
    gemm_tn(n, n4, b, hprev, dat, gp.w_rec.data().data());
    gemm_nt(b, n, n4, dat, p.w_rec.data().data(), dh.data());
    dh_next.swap(dh);
  }

  gemm_tn(d, n4, T * b, c.x.data(), da.data(), gp.w_in.data().data());
  for (std::size_t row = 0; row < T * b; ++row)
    for (std::size_t j = 0; j < n4; ++j) gp.b[j] += da[row * n4 + j];
  std::vector<double> dx(T * b * d, 0.0);
  gemm_nt(T * b, d, n4, da.data(), p.w_in.data().data(), dx.data());
  res.grad_in = from_time_major(dx.data(), T, b, d, false);
  return res;
}

}  // namespace bigat
