// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward passes for every block of the network. Sequences are
// laid out [batch × time × features]; backward passes are hand-written and
// consume the cache produced by exactly one forward call.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bigat/numerics.hpp"
#include "bigat/rng.hpp"
#include "bigat/tensor.hpp"

namespace bigat {

using NamedTensorRefs = std::vector<std::pair<std::string, Tensor*>>;
using NamedTensorCRefs = std::vector<std::pair<std::string, const Tensor*>>;

// ---------------------------------------------------------------------------
// Parameter sets

struct DenseParams {
  Tensor w;  // [in × out]
  Tensor b;  // [out]

  static DenseParams zeros(std::size_t in, std::size_t out);
  static std::size_t count(std::size_t in, std::size_t out) { return in * out + out; }
  std::size_t in() const { return w.dim(0); }
  std::size_t out() const { return w.dim(1); }
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

/// Reset-after GRU with separate input and recurrent biases. Gate blocks in
/// the 3n axis are ordered update (z), reset (r), candidate (h).
struct GruParams {
  Tensor w_in;   // [d × 3n]
  Tensor w_rec;  // [n × 3n]
  Tensor b_in;   // [3n]
  Tensor b_rec;  // [3n]

  static GruParams zeros(std::size_t input_dim, std::size_t units);
  static std::size_t count(std::size_t d, std::size_t n) { return 3 * (d * n + n * n + 2 * n); }
  std::size_t input_dim() const { return w_in.dim(0); }
  std::size_t units() const { return w_rec.dim(0); }
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

struct BiGruParams {
  GruParams forward;
  GruParams backward;

  static BiGruParams zeros(std::size_t input_dim, std::size_t units);
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

/// LSTM with gate blocks ordered input, forget, candidate, output.
struct LstmParams {
  Tensor w_in;   // [d × 4n]
  Tensor w_rec;  // [n × 4n]
  Tensor b;      // [4n]

  static LstmParams zeros(std::size_t input_dim, std::size_t units);
  static std::size_t count(std::size_t d, std::size_t n) { return 4 * (d * n + n * n + n); }
  std::size_t input_dim() const { return w_in.dim(0); }
  std::size_t units() const { return w_rec.dim(0); }
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

struct MhaParams {
  std::size_t heads = 0;
  std::size_t key_dim = 0;
  Tensor wq, bq;  // [D × h·k], [h·k]
  Tensor wk, bk;
  Tensor wv, bv;
  Tensor wo, bo;  // [h·k × D], [D]

  static MhaParams zeros(std::size_t model_dim, std::size_t heads, std::size_t key_dim);
  static std::size_t count(std::size_t model_dim, std::size_t heads, std::size_t key_dim) {
    const std::size_t hk = heads * key_dim;
    return 3 * (model_dim * hk + hk) + (hk * model_dim + model_dim);
  }
  std::size_t model_dim() const { return wq.dim(0); }
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

struct LayerNormParams {
  Tensor gamma;  // [d]
  Tensor beta;   // [d]
  double eps = kLayerNormEps;

  static LayerNormParams identity(std::size_t d, double eps = kLayerNormEps);
  static std::size_t count(std::size_t d) { return 2 * d; }
  NamedTensorRefs tensors();
  NamedTensorCRefs tensors() const;
};

/// Marker for parameter-free layers (dropout, flatten).
struct NoParams {
  NamedTensorRefs tensors() { return {}; }
  NamedTensorCRefs tensors() const { return {}; }
};

using LayerParams =
    std::variant<NoParams, DenseParams, BiGruParams, GruParams, LstmParams, MhaParams,
                 LayerNormParams>;

std::size_t param_count(const LayerParams& p);

// ---------------------------------------------------------------------------
// Caches

enum class DenseActivation { kNone, kRelu, kSoftmax };
enum class Direction { kForward, kBackward };
enum class Mode { kTrain, kEval };

struct DenseCache {
  Tensor x;  // input as given (any rank ≥ 2)
  Tensor y;  // post-activation output
  DenseActivation act = DenseActivation::kNone;
};

struct GruCache {
  Direction direction = Direction::kForward;
  std::size_t batch = 0, steps = 0, input_dim = 0, units = 0;
  std::vector<double> x;    // [T × b × d], time-major in processing order
  std::vector<double> h;    // [(T+1) × b × n], h[0] = 0
  std::vector<double> z;    // [T × b × n]
  std::vector<double> r;    // [T × b × n]
  std::vector<double> hh;   // [T × b × n] candidate
  std::vector<double> huh;  // [T × b × n] recurrent candidate term incl. bias
};

struct BiGruCache {
  GruCache forward;
  GruCache backward;
};

struct LstmCache {
  bool return_sequences = false;
  std::size_t batch = 0, steps = 0, input_dim = 0, units = 0;
  std::vector<double> x;      // [T × b × d]
  std::vector<double> h;      // [(T+1) × b × n]
  std::vector<double> c;      // [(T+1) × b × n]
  std::vector<double> gates;  // [T × b × 4n] post-activation i, f, g, o
};

struct MhaCache {
  std::size_t batch = 0, steps = 0;
  Tensor x;        // [b·T × D]
  Tensor q, k, v;  // [b·T × h·k]
  Tensor attn;     // [b × h × T × T]
  Tensor concat;   // [b·T × h·k]
};

struct LayerNormCache {
  Tensor xhat;
  std::vector<double> inv_std;
};

struct DropoutCache {
  Tensor mask;  // empty in eval mode
};

using LayerCache = std::variant<DenseCache, GruCache, BiGruCache, LstmCache, MhaCache,
                                LayerNormCache, DropoutCache>;

// ---------------------------------------------------------------------------
// Forward / backward

template <typename Cache>
struct Forward {
  Tensor out;
  Cache cache;
};

template <typename Params>
struct Backward {
  Tensor grad_in;
  Params grad_params;
};

/// act(x·W + b) over the last axis of x.
Forward<DenseCache> dense_forward(const DenseParams& p, const Tensor& x, DenseActivation act);
Backward<DenseParams> dense_backward(const DenseParams& p, const DenseCache& cache,
                                     const Tensor& grad_out);

/// Single GRU step for one batch: h_prev [b × n], x [b × d] → h [b × n].
Tensor gru_cell(const GruParams& p, const Tensor& x, const Tensor& h_prev);

/// Full-sequence GRU, zero initial state. Direction::kBackward processes the
/// reversed sequence and reverses the outputs back to input time order.
Forward<GruCache> gru_sequence_forward(const GruParams& p, const Tensor& x, Direction dir);
Backward<GruParams> gru_sequence_backward(const GruParams& p, const GruCache& cache,
                                          const Tensor& grad_out);

/// Forward and backward-in-time GRUs concatenated on the last axis.
Forward<BiGruCache> bigru_forward(const BiGruParams& p, const Tensor& x);
Backward<BiGruParams> bigru_backward(const BiGruParams& p, const BiGruCache& cache,
                                     const Tensor& grad_out);

/// LSTM with zero initial state. Returns [b × n] (last state) or [b × T × n].
Forward<LstmCache> lstm_forward(const LstmParams& p, const Tensor& x, bool return_sequences);
inline Forward<LstmCache> lstm_last_forward(const LstmParams& p, const Tensor& x) {
  return lstm_forward(p, x, false);
}
Backward<LstmParams> lstm_backward(const LstmParams& p, const LstmCache& cache,
                                   const Tensor& grad_out);

/// Multi-head self-attention, query = key = value = x, no mask.
Forward<MhaCache> mha_self_forward(const MhaParams& p, const Tensor& x);
Backward<MhaParams> mha_backward(const MhaParams& p, const MhaCache& cache,
                                 const Tensor& grad_out);

Forward<LayerNormCache> layer_norm_forward(const LayerNormParams& p, const Tensor& x);
Backward<LayerNormParams> layer_norm_backward(const LayerNormParams& p,
                                              const LayerNormCache& cache,
                                              const Tensor& grad_out);

/// Inverted dropout. Train mode needs an rng; eval mode is the identity.
/// Throws ConfigError for rate outside [0, 1).
Forward<DropoutCache> dropout_apply(const Tensor& x, double rate, Mode mode, Rng* rng);
Tensor dropout_backward(const DropoutCache& cache, const Tensor& grad_out);

/// [b × T × c] → [b × T·c].
Tensor flatten(const Tensor& x);
/// [b × p] ∥ [b × q] → [b × (p+q)].
Tensor concat_last(const Tensor& a, const Tensor& b);
/// Inverse of concat_last on gradients.
std::pair<Tensor, Tensor> split_last(const Tensor& g, std::size_t left_width);

struct LayerGrads {
  Tensor grad_in;
  LayerParams grad_params;
};

/// Dispatches to the matching backward. Throws Error when the cache was not
/// produced by a layer of the same kind as `params`.
LayerGrads layer_backward(const LayerParams& params, const LayerCache& cache,
                          const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Initialization

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// Rank-2 tensor with orthonormal rows or columns (whichever is fewer),
/// from Gram-Schmidt on a standard normal draw.
void orthogonal_init(Tensor& w, Rng& rng);

}  // namespace bigat
