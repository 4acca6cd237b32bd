// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <numeric>

#include "bigat/error.hpp"
#include "bigat/training.hpp"

namespace bigat {

std::string to_string(LossKind k) { return k == LossKind::kFocal ? "focal" : "cce"; }

std::string to_string(Balancing b) {
  switch (b) {
    case Balancing::kRos: return "ros";
    case Balancing::kSmote: return "smote";
    default: return "none";
  }
}

LossKind loss_from_string(const std::string& s) {
  if (s == "cce") return LossKind::kCce;
  if (s == "focal") return LossKind::kFocal;
  throw ConfigError("unknown loss '" + s + "' (expected cce or focal)");
}

Balancing balancing_from_string(const std::string& s) {
  if (s == "none") return Balancing::kNone;
  if (s == "ros") return Balancing::kRos;
  if (s == "smote") return Balancing::kSmote;
  throw ConfigError("unknown balancing '" + s + "' (expected none, ros or smote)");
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  if (state.m.entries.empty() && !params.entries.empty()) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
  }
  const auto n = params.entries.size();
  if (grads.entries.size() != n || state.m.entries.size() != n || state.v.entries.size() != n) {
    throw ShapeError("adam: gradient list does not match the parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t e = 0; e < n; ++e) {
    auto& p = params.entries[e];
    const auto& g = grads.entries[e];
    if (g.name != p.name || g.value.shape() != p.value.shape()) {
      throw ShapeError("adam: gradient '" + g.name + "' " + shape_str(g.value.shape()) +
                       " does not match parameter '" + p.name + "' " +
                       shape_str(p.value.shape()));
    }
    auto pd = p.value.data();
    auto gd = g.value.data();
    auto md = state.m.entries[e].value.data();
    auto vd = state.v.entries[e].value.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / c1;
      const double vhat = vd[i] / c2;
      pd[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"epochs", epochs},               {"loss", to_string(loss)},
          {"focal_gamma", focal_gamma},     {"focal_alpha", focal_alpha},
          {"seed", seed},                   {"balancing", to_string(balancing)},
          {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.loss = loss_from_string(j.value("loss", to_string(c.loss)));
    c.focal_gamma = j.value("focal_gamma", c.focal_gamma);
    c.focal_alpha = j.value("focal_alpha", c.focal_alpha);
    c.seed = j.value("seed", c.seed);
    c.balancing = balancing_from_string(j.value("balancing", to_string(c.balancing)));
    c.clip_norm = j.value("clip_norm", c.clip_norm);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  return c;
}

void History::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out.precision(10);
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_acc << ',' << r.val_loss << ','
        << r.val_acc << '\n';
  }
}

nlohmann::json History::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"train_acc", r.train_acc},
                   {"val_loss", r.val_loss},
                   {"val_acc", r.val_acc}});
  }
  return {{"epochs", arr}, {"optimizer_steps", optimizer_steps}};
}

namespace {

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t lo,
                   std::size_t hi) {
  const std::size_t stride = x.size() / x.dim(0);
  Shape s = x.shape();
  s[0] = hi - lo;
  Tensor out(s);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = lo; i < hi; ++i) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx[i] * stride), stride,
                dst.begin() + static_cast<std::ptrdiff_t>((i - lo) * stride));
  }
  return out;
}

double accuracy(const Tensor& probs, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  const std::size_t c = probs.dim(1);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    hit += static_cast<int>(best) == labels[i];
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

LossResult batch_loss(const Tensor& probs, const Tensor& targets, const TrainConfig& cfg) {
  return cfg.loss == LossKind::kFocal ? focal_loss(probs, targets, cfg.focal_gamma, cfg.focal_alpha)
                                      : cce_loss(probs, targets);
}

void clip_global(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& e : grads.entries)
    for (double v : e.value.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (auto& e : grads.entries) scale_inplace(e.value, s);
}

}  // namespace

TrainResult train(const VariantSpec& spec, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg, const std::function<void(const HistoryRow&)>& on_epoch) {
  if (train_ds.size() == 0) throw EmptyDatasetError("training set is empty");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (train_ds.seq_len() != spec.seq_len) {
    throw ShapeError("training data has sequence length " + std::to_string(train_ds.seq_len()) +
                     " but the model expects " + std::to_string(spec.seq_len));
  }
  if (train_ds.n_classes() != 0 && train_ds.n_classes() != spec.n_classes) {
    throw ShapeError("training data has " + std::to_string(train_ds.n_classes()) +
                     " classes but the model has " + std::to_string(spec.n_classes));
  }

  Rng root(cfg.seed);
  Rng init_rng = root.derive(1);
  Rng shuffle_rng = root.derive(2);
  Rng dropout_rng = root.derive(3);
  Rng balance_rng = root.derive(4);

  Dataset fit_ds = train_ds;
  if (cfg.balancing == Balancing::kRos) fit_ds = ros_balance(train_ds, balance_rng);
  if (cfg.balancing == Balancing::kSmote) fit_ds = smote_balance(train_ds, balance_rng);

  const Network net(spec);
  ModelParams params = net.init(init_rng);
  round_to_storage(params);
  AdamState adam = AdamState::for_params(params);

  const std::size_t n = fit_ds.size();
  const Tensor targets_all = one_hot(fit_ds.y, spec.n_classes);
  TrainResult result;
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < n; lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      const Tensor xb = gather_rows(fit_ds.x, order, lo, hi);
      const Tensor yb = gather_rows(targets_all, order, lo, hi);
      const ForwardPass pass = net.forward(params, xb, Mode::kTrain, &dropout_rng, true);
      const LossResult lr = batch_loss(pass.probs, yb, cfg);
      if (!std::isfinite(lr.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      }
      ModelParams grads = net.backward(params, pass, lr.grad_probs);
      if (cfg.clip_norm > 0.0) clip_global(grads, cfg.clip_norm);
      adam_step(params, grads, adam, cfg.learning_rate);
      round_to_storage(params);
      ++result.history.optimizer_steps;

      loss_sum += lr.loss * static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t r = i - lo;
        std::size_t best = 0;
        for (std::size_t j = 1; j < spec.n_classes; ++j)
          if (pass.probs.at(r, j) > pass.probs.at(r, best)) best = j;
        hits += static_cast<int>(best) == fit_ds.y[order[i]];
      }
    }
    for (const auto& e : params.entries) {
      if (!e.value.all_finite()) {
        throw NumericError("non-finite parameter '" + e.name + "' after epoch " +
                           std::to_string(epoch));
      }
    }

    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(n);
    row.train_acc = static_cast<double>(hits) / static_cast<double>(n);
    if (val_ds.size() > 0) {
      const Tensor probs = predict(params, spec, val_ds.x);
      row.val_loss = evaluate_loss(probs, val_ds.y, cfg);
      row.val_acc = accuracy(probs, val_ds.y);
    }
    result.history.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace bigat
