// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

#include "bigat/model.hpp"
#include "bigat/numerics.hpp"
#include "oracles.hpp"

namespace bigat::testing {

/// Worst relative error between a layer's analytic backward and central
/// differences of Σ out ⊙ R (R random), over the input and every parameter.
template <typename Params, typename FwdFn, typename BwdFn>
double layer_grad_error(const Params& p0, const Tensor& x0, FwdFn fwd, BwdFn bwd, Rng& rng) {
  auto f0 = fwd(p0, x0);
  const Tensor weights = random_tensor(f0.out.shape(), rng);
  auto an = bwd(p0, f0.cache, weights);

  auto fx = [&](const Tensor& x) { return weighted_sum(fwd(p0, x).out, weights); };
  double worst = max_relative_error(an.grad_in, finite_diff_grad(fx, x0));

  Params probe = p0;
  auto slots = probe.tensors();
  auto grads = an.grad_params.tensors();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Tensor* t = slots[i].second;
    const Tensor orig = *t;
    auto ft = [&](const Tensor& v) {
      *t = v;
      const double r = weighted_sum(fwd(probe, x0).out, weights);
      *t = orig;
      return r;
    };
    worst = std::max(worst, max_relative_error(*grads[i].second, finite_diff_grad(ft, orig)));
  }
  return worst;
}

template <typename Params>
void randomize(Params& p, Rng& rng, double scale = 0.5) {
  for (auto& [name, t] : p.tensors())
    for (auto& v : t->vec()) v = rng.uniform(-scale, scale);
}

/// Whole-network check: Σ probs ⊙ R in train mode, the dropout stream
/// restarted from the same seed for every evaluation so masks stay fixed.
inline double model_grad_error(const VariantSpec& spec, std::uint64_t seed, std::size_t batch = 3) {
  Rng rng(seed);
  const Network net(spec);
  ModelParams params = net.init(rng);
  for (auto& e : params.entries)
    for (auto& v : e.value.vec()) v += rng.uniform(-0.1, 0.1);
  const Tensor x = random_tensor({batch, spec.seq_len, 1}, rng);
  const std::uint64_t drop_seed = rng.next_u64();
  auto run = [&](const ModelParams& p, bool caches) {
    Rng drop(drop_seed);
    return net.forward(p, x, Mode::kTrain, &drop, caches);
  };
  const ForwardPass pass = run(params, true);
  const Tensor weights = random_tensor(pass.probs.shape(), rng);
  const ModelParams grads = net.backward(params, pass, weights);

  double worst = 0.0;
  ModelParams probe = params;
  for (std::size_t i = 0; i < probe.entries.size(); ++i) {
    Tensor& t = probe.entries[i].value;
    const Tensor orig = t;
    auto f = [&](const Tensor& v) {
      t = v;
      const double r = weighted_sum(run(probe, false).probs, weights);
      t = orig;
      return r;
    };
    worst = std::max(worst, max_relative_error(grads.entries[i].value, finite_diff_grad(f, orig)));
  }
  return worst;
}

/// Tiny canonical-topology network: T=6, 4 recurrent units, 2 heads of width 3.
inline VariantSpec tiny_bigat(std::size_t n_classes = 3) {
  BigatOptions o;
  o.gru_units = 4;
  o.lstm_units = 4;
  o.heads = 2;
  o.key_dim = 3;
  o.head_widths = {5, 4};
  return bigat_spec(6, n_classes, o);
}

}  // namespace bigat::testing
