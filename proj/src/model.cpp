// SPDX-License-Identifier: Apache-2.0
#include "bigat/model.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "bigat/error.hpp"

namespace bigat {

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::kBiGru:
      return "BiGRU";
    case BlockKind::kLstmLast:
      return "LSTM-last";
    case BlockKind::kLstmSeq:
      return "LSTM-seq";
    case BlockKind::kMha:
      return "MHA";
    case BlockKind::kLayerNorm:
      return "LayerNorm";
    case BlockKind::kDropout:
      return "Dropout";
    case BlockKind::kProject:
      return "Project";
  }
  return "?";
}

BlockKind block_kind_from_string(const std::string& s) {
  for (auto k : {BlockKind::kBiGru, BlockKind::kLstmLast, BlockKind::kLstmSeq, BlockKind::kMha,
                 BlockKind::kLayerNorm, BlockKind::kDropout, BlockKind::kProject}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown block kind '" + s + "'");
}

std::string BlockSpec::label() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case BlockKind::kBiGru:
    case BlockKind::kLstmLast:
    case BlockKind::kLstmSeq:
    case BlockKind::kProject:
      os << '(' << units << ')';
      break;
    case BlockKind::kMha:
      os << '(' << heads << ", " << key_dim << ')';
      break;
    case BlockKind::kDropout:
      os << '(' << rate << ')';
      break;
    case BlockKind::kLayerNorm:
      break;
  }
  return os.str();
}

std::size_t ModelParams::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.value.size();
  return n;
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e.value;
  throw Error("no parameter named '" + name + "'");
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.entries.reserve(entries.size());
  for (const auto& e : entries) z.entries.push_back({e.name, Tensor(e.value.shape())});
  return z;
}

// ---------------------------------------------------------------------------

namespace {

std::string kind_slug(BlockKind k) {
  switch (k) {
    case BlockKind::kBiGru:
      return "bigru";
    case BlockKind::kLstmLast:
    case BlockKind::kLstmSeq:
      return "lstm";
    case BlockKind::kMha:
      return "mha";
    case BlockKind::kLayerNorm:
      return "layer_norm";
    case BlockKind::kDropout:
      return "dropout";
    case BlockKind::kProject:
      return "project";
  }
  return "block";
}

NamedTensorRefs refs(LayerParams& p) {
  return std::visit([](auto& v) { return v.tensors(); }, p);
}

NamedTensorCRefs crefs(const LayerParams& p) {
  return std::visit([](const auto& v) { return v.tensors(); }, p);
}

}  // namespace

Network::Network(VariantSpec spec) : spec_(std::move(spec)) {
  auto fail = [](std::size_t branch, std::size_t idx, const BlockSpec& b, const std::string& why) {
    throw ConstructionError("branch " + std::to_string(branch + 1) + " block " +
                            std::to_string(idx + 1) + " (" + b.label() + "): " + why);
  };
  if (spec_.seq_len < 1) throw ConstructionError("seq_len must be at least 1");
  if (spec_.n_classes < 2) throw ConstructionError("n_classes must be at least 2");
  if (spec_.branches.empty() || spec_.branches.size() > 2) {
    throw ConstructionError("a variant has one or two branches, got " +
                            std::to_string(spec_.branches.size()));
  }

  for (std::size_t bi = 0; bi < spec_.branches.size(); ++bi) {
    const auto& blocks = spec_.branches[bi];
    if (blocks.empty()) throw ConstructionError("branch " + std::to_string(bi + 1) + " is empty");
    Branch br;
    std::size_t width = 1;
    bool seq = true;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const BlockSpec& b = blocks[i];
      Layer L;
      L.block = b;
      L.name = "branch" + std::to_string(bi + 1) + "/" + std::to_string(i) + "_" +
               kind_slug(b.kind);
      L.in_width = width;
      auto need_seq = [&] {
        if (!seq) fail(bi, i, b, "requires a sequence input but the branch is already rank 2");
      };
      switch (b.kind) {
        case BlockKind::kBiGru:
          need_seq();
          if (b.units == 0) fail(bi, i, b, "units must be positive");
          L.shape_template = BiGruParams::zeros(width, b.units);
          width = 2 * b.units;
          break;
        case BlockKind::kLstmLast:
        case BlockKind::kLstmSeq:
          need_seq();
          if (b.units == 0) fail(bi, i, b, "units must be positive");
          L.shape_template = LstmParams::zeros(width, b.units);
          width = b.units;
          seq = b.kind == BlockKind::kLstmSeq;
          break;
        case BlockKind::kMha:
          need_seq();
          if (b.heads == 0 || b.key_dim == 0) fail(bi, i, b, "heads and key_dim must be positive");
          L.shape_template = MhaParams::zeros(width, b.heads, b.key_dim);
          break;
        case BlockKind::kLayerNorm:
          L.shape_template = LayerNormParams::identity(width, spec_.layer_norm_eps);
          break;
        case BlockKind::kDropout:
          if (!(b.rate >= 0.0 && b.rate < 1.0)) fail(bi, i, b, "rate must lie in [0, 1)");
          L.shape_template = NoParams{};
          break;
        case BlockKind::kProject:
          need_seq();
          if (b.units == 0) fail(bi, i, b, "width must be positive");
          L.shape_template = DenseParams::zeros(width, b.units);
          width = b.units;
          break;
      }
      L.out_width = width;
      L.seq_out = seq;
      br.layers.push_back(std::move(L));
    }
    br.flatten = seq;
    br.out_width = seq ? width * spec_.seq_len : width;
    branches_.push_back(std::move(br));
  }

  std::size_t width = 0;
  for (const auto& br : branches_) width += br.out_width;
  std::vector<std::size_t> widths = spec_.head_widths;
  widths.push_back(spec_.n_classes);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] == 0) throw ConstructionError("head dense width must be positive");
    Layer L;
    L.block = BlockSpec{BlockKind::kProject, widths[i], 0, 0, 0.0};
    L.name = i + 1 == widths.size() ? "head/output" : "head/dense_" + std::to_string(i);
    L.in_width = width;
    L.out_width = widths[i];
    L.seq_out = false;
    L.shape_template = DenseParams::zeros(width, widths[i]);
    width = widths[i];
    head_.push_back(std::move(L));
  }

  auto layout = [this](Layer& L) {
    L.first_param = param_layout_.size();
    for (const auto& [name, t] : crefs(L.shape_template)) {
      param_layout_.emplace_back(L.name + "/" + name, t->shape());
      L.n_scalars += t->size();
    }
    L.n_params = param_layout_.size() - L.first_param;
  };
  for (auto& br : branches_)
    for (auto& L : br.layers) layout(L);
  for (auto& L : head_) layout(L);
}

std::size_t Network::param_total() const {
  std::size_t n = 0;
  for (const auto& [name, shape] : param_layout_) n += shape_size(shape);
  return n;
}

LayerParams Network::gather(const ModelParams& params, const Layer& L) const {
  if (params.entries.size() != param_layout_.size()) {
    throw ShapeError("model parameters do not match the variant layout (" +
                     std::to_string(params.entries.size()) + " vs " +
                     std::to_string(param_layout_.size()) + " tensors)");
  }
  LayerParams p = L.shape_template;
  auto r = refs(p);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const NamedTensor& e = params.entries[L.first_param + i];
    if (e.value.shape() != r[i].second->shape()) {
      throw ShapeError("parameter " + e.name + " has shape " + shape_str(e.value.shape()) +
                       ", expected " + shape_str(r[i].second->shape()));
    }
    *r[i].second = e.value;
  }
  return p;
}

void Network::scatter(const LayerParams& grads, const Layer& L, ModelParams& out) const {
  auto r = crefs(grads);
  for (std::size_t i = 0; i < r.size(); ++i) out.entries[L.first_param + i].value = *r[i].second;
}

ModelParams Network::init(Rng& rng) const {
  ModelParams m;
  for (const auto& [name, shape] : param_layout_) m.entries.push_back({name, Tensor(shape)});
  auto init_layer = [&](const Layer& L) {
    LayerParams p = L.shape_template;
    std::visit(
        [&](auto& v) {
          using P = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<P, DenseParams>) {
            glorot_uniform(v.w, v.in(), v.out(), rng);
          } else if constexpr (std::is_same_v<P, BiGruParams>) {
            for (GruParams* g : {&v.forward, &v.backward}) {
              glorot_uniform(g->w_in, g->input_dim(), 3 * g->units(), rng);
              orthogonal_init(g->w_rec, rng);
            }
          } else if constexpr (std::is_same_v<P, LstmParams>) {
            glorot_uniform(v.w_in, v.input_dim(), 4 * v.units(), rng);
            orthogonal_init(v.w_rec, rng);
            for (std::size_t j = 0; j < v.units(); ++j) v.b[v.units() + j] = spec_.lstm_forget_bias;
          } else if constexpr (std::is_same_v<P, MhaParams>) {
            const std::size_t d = v.model_dim(), hk = v.heads * v.key_dim;
            glorot_uniform(v.wq, d, hk, rng);
            glorot_uniform(v.wk, d, hk, rng);
            glorot_uniform(v.wv, d, hk, rng);
            glorot_uniform(v.wo, hk, d, rng);
          }
        },
        p);
    scatter(p, L, m);
  };
  for (const auto& br : branches_)
    for (const auto& L : br.layers) init_layer(L);
  for (const auto& L : head_) init_layer(L);
  round_to_storage(m);
  return m;
}

ForwardPass Network::forward(const ModelParams& params, const Tensor& x, Mode mode, Rng* rng,
                             bool keep_caches) const {
  if (x.rank() != 3 || x.dim(1) != spec_.seq_len || x.dim(2) != 1) {
    throw ShapeError("model input must be (batch, " + std::to_string(spec_.seq_len) +
                     ", 1), got " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  ForwardPass fp;
  fp.shapes.push_back(x.shape());
  auto keep = [&](LayerCache&& c) {
    if (keep_caches) fp.caches.push_back(std::move(c));
  };

  std::vector<Tensor> outs;
  for (const auto& br : branches_) {
    Tensor h = x;
    for (const auto& L : br.layers) {
      LayerParams p = gather(params, L);
      switch (L.block.kind) {
        case BlockKind::kBiGru: {
          auto r = bigru_forward(std::get<BiGruParams>(p), h);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
        case BlockKind::kLstmLast:
        case BlockKind::kLstmSeq: {
          auto r = lstm_forward(std::get<LstmParams>(p), h, L.block.kind == BlockKind::kLstmSeq);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
        case BlockKind::kMha: {
          auto r = mha_self_forward(std::get<MhaParams>(p), h);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
        case BlockKind::kLayerNorm: {
          auto r = layer_norm_forward(std::get<LayerNormParams>(p), h);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
        case BlockKind::kDropout: {
          auto r = dropout_apply(h, L.block.rate, mode, rng);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
        case BlockKind::kProject: {
          auto r = dense_forward(std::get<DenseParams>(p), h, DenseActivation::kNone);
          h = std::move(r.out);
          keep(std::move(r.cache));
          break;
        }
      }
      fp.shapes.push_back(h.shape());
    }
    if (br.flatten) {
      h = flatten(h);
      fp.shapes.push_back(h.shape());
    }
    fp.branch_out_shapes.push_back(h.shape());
    outs.push_back(std::move(h));
  }

  Tensor z = outs[0];
  if (outs.size() == 2) {
    z = concat_last(outs[0], outs[1]);
    fp.shapes.push_back(z.shape());
  }
  for (std::size_t i = 0; i < head_.size(); ++i) {
    const bool last = i + 1 == head_.size();
    auto r = dense_forward(std::get<DenseParams>(gather(params, head_[i])), z,
                           last ? DenseActivation::kSoftmax : DenseActivation::kRelu);
    z = std::move(r.out);
    keep(std::move(r.cache));
    fp.shapes.push_back(z.shape());
  }
  (void)batch;
  fp.probs = std::move(z);
  return fp;
}

ModelParams Network::backward(const ModelParams& params, const ForwardPass& pass,
                              const Tensor& grad_probs) const {
  std::size_t n_layers = head_.size();
  for (const auto& br : branches_) n_layers += br.layers.size();
  if (pass.caches.size() != n_layers) {
    throw Error("backward needs a train-mode forward pass with caches");
  }
  ModelParams grads = params.zeros_like();
  std::size_t ci = pass.caches.size();

  Tensor g = grad_probs;
  for (std::size_t i = head_.size(); i-- > 0;) {
    auto r = layer_backward(gather(params, head_[i]), pass.caches[--ci], g);
    scatter(r.grad_params, head_[i], grads);
    g = std::move(r.grad_in);
  }

  std::vector<Tensor> branch_grads;
  if (branches_.size() == 2) {
    auto [a, b] = split_last(g, branches_[0].out_width);
    branch_grads = {std::move(a), std::move(b)};
  } else {
    branch_grads = {std::move(g)};
  }

  for (std::size_t bi = branches_.size(); bi-- > 0;) {
    const Branch& br = branches_[bi];
    Tensor h = std::move(branch_grads[bi]);
    if (br.flatten) h.reshape({h.dim(0), spec_.seq_len, br.layers.back().out_width});
    for (std::size_t li = br.layers.size(); li-- > 0;) {
      const Layer& L = br.layers[li];
      auto r = layer_backward(gather(params, L), pass.caches[--ci], h);
      scatter(r.grad_params, L, grads);
      h = std::move(r.grad_in);
    }
  }
  return grads;
}

std::vector<LayerInfo> Network::summary(std::size_t batch) const {
  std::vector<LayerInfo> rows;
  const std::size_t T = spec_.seq_len;
  rows.push_back({"Input", "Input", "-", {batch, T, 1}, 0, "-"});
  std::size_t dropout_no = 0;
  std::vector<std::string> branch_tails;
  for (const auto& br : branches_) {
    std::string prev = "Input_Layer[0][0]";
    for (const auto& L : br.layers) {
      LayerInfo info;
      info.params = L.n_scalars;
      info.connected_to = prev;
      info.output_shape = L.seq_out ? Shape{batch, T, L.out_width} : Shape{batch, L.out_width};
      switch (L.block.kind) {
        case BlockKind::kBiGru:
          info.name = info.kind = "BiGRU";
          info.units = std::to_string(L.block.units);
          prev = "BiGRU";
          break;
        case BlockKind::kLstmLast:
        case BlockKind::kLstmSeq:
          info.name = info.kind = "LSTM";
          info.units = std::to_string(L.block.units);
          prev = "LSTM";
          break;
        case BlockKind::kMha:
          info.name = info.kind = "MHA";
          info.units = "-";
          prev = "MHA (" + std::to_string(L.block.heads) + ", " + std::to_string(L.block.key_dim) +
                 ")";
          break;
        case BlockKind::kLayerNorm:
          info.name = info.kind = "LayerNorm.";
          info.units = "-";
          prev = "LayerNorm.";
          break;
        case BlockKind::kDropout:
          info.kind = "Dropout";
          info.name = "Dropout_" + std::to_string(++dropout_no);
          info.units = "-";
          prev = info.name;
          break;
        case BlockKind::kProject:
          info.name = info.kind = "Projection";
          info.units = std::to_string(L.block.units);
          prev = "Projection";
          break;
      }
      rows.push_back(std::move(info));
    }
    if (br.flatten) {
      rows.push_back({"Flatten", "Flatten", "-", {batch, br.out_width}, 0, prev});
      prev = "Flatten";
    }
    branch_tails.push_back(prev);
  }
  std::string prev = branch_tails[0];
  if (branches_.size() == 2) {
    rows.push_back({"Concatenate",
                    "Concatenate",
                    "-",
                    {batch, branches_[0].out_width + branches_[1].out_width},
                    0,
                    branch_tails[0] + ", " + branch_tails[1]});
    prev = "Concatenate";
  }
  for (const auto& L : head_) {
    rows.push_back({"Dense", "Dense", "-", {batch, L.out_width}, L.n_scalars, prev});
    prev = "Dense";
  }
  return rows;
}

ModelParams build(const VariantSpec& spec, Rng& rng) { return Network(spec).init(rng); }

std::size_t param_total(const VariantSpec& spec) { return Network(spec).param_total(); }

Tensor predict(const ModelParams& params, const VariantSpec& spec, const Tensor& x, Mode mode,
               Rng* rng) {
  Network net(spec);
  constexpr std::size_t kChunk = 256;
  if (x.rank() != 3) throw ShapeError("predict: expected (batch, T, 1), got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0);
  if (n <= kChunk) return net.forward(params, x, mode, rng, false).probs;
  const std::size_t row = x.dim(1) * x.dim(2);
  Tensor probs({n, spec.n_classes});
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    Tensor part({m, x.dim(1), x.dim(2)});
    std::copy_n(x.data().begin() + start * row, m * row, part.data().begin());
    Tensor p = net.forward(params, part, mode, rng, false).probs;
    std::copy(p.data().begin(), p.data().end(),
              probs.data().begin() + start * spec.n_classes);
  }
  return probs;
}

void round_to_storage(ModelParams& params) {
  for (auto& e : params.entries)
    for (auto& v : e.value.vec()) v = static_cast<double>(static_cast<float>(v));
}

std::string format_summary(const Network& net) {
  auto shape_cell = [](const Shape& s) {
    std::string out = "(None";
    for (std::size_t i = 1; i < s.size(); ++i) out += ", " + std::to_string(s[i]);
    return out + ")";
  };
  auto with_commas = [](std::size_t v) {
    std::string s = std::to_string(v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
    return s;
  };
  std::ostringstream os;
  os << std::left << std::setw(4) << "#" << std::setw(14) << "DL Layer" << std::setw(8) << "Unit"
     << std::setw(20) << "Output Shape" << std::setw(12) << "Param #"
     << "Connected to\n";
  const auto rows = net.summary(0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << std::left << std::setw(4) << (i + 1) << std::setw(14) << r.name << std::setw(8)
       << r.units << std::setw(20) << shape_cell(r.output_shape) << std::setw(12)
       << with_commas(r.params) << r.connected_to << '\n';
  }
  const std::string total = with_commas(net.param_total());
  os << "Total parameters: " << total << '\n';
  os << "Trainable parameters: " << total << '\n';
  os << "Non-trainable parameters: 0\n";
  return os.str();
}

}  // namespace bigat
