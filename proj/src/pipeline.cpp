// SPDX-License-Identifier: Apache-2.0
#include "bigat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <fstream>
#include <set>

#include "bigat/error.hpp"

namespace bigat {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs `f`, re-raising library errors as StageError tagged with `stage`.
template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what(), std::current_exception());
  }
}

// Stream ids below the training seed; training itself derives 1..4.
constexpr std::uint64_t kSynthStream = 10;
constexpr std::uint64_t kSplitStream = 11;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data",          "synth",           "synth_classes",       "synth_per_class",
      "synth_seq_len", "synth_separation", "synth_imbalance",    "label",
      "normal_class",  "train_frac",      "variant",             "custom_variant",
      "learning_rate", "batch_size",      "epochs",              "loss",
      "focal_gamma",   "focal_alpha",     "seed",                "balancing",
      "clip_norm",     "out_dir",         "eval_on",             "bench_warmup",
      "bench_repeats", "explain_samples", "explain_permutations", "top_k",
      "explain_seed",  "holdout",         "ablate_ids"};
  return keys;
}

Dataset from_encoded(const EncodedTable& e) {
  Dataset ds;
  ds.x = to_sequences(e.features);
  ds.y = e.labels;
  ds.codec = e.encoding.codec;
  ds.feature_names = e.encoding.feature_names;
  return ds;
}

struct Source {
  Dataset data;  // unscaled
  std::optional<Encoding> encoding;
  CleanReport clean;
};

Source load_source(const RunConfig& cfg, const Preprocessing* fitted) {
  cfg.validate();
  Source src;
  if (cfg.use_synth) {
    src.data = in_stage("ingest", [&] {
      SynthConfig sc = cfg.synth;
      sc.normal_name = cfg.normal_class;
      Rng rng = Rng(cfg.train.seed).derive(kSynthStream);
      return synth_generate(sc, rng);
    });
    return src;
  }
  const RawTable raw = in_stage("ingest", [&] { return load_csv(cfg.data_path, cfg.label_column); });
  const RawTable cleaned = in_stage("clean", [&] { return clean(raw, &src.clean); });
  const EncodedTable enc = in_stage("encode", [&] {
    if (fitted && fitted->encoding) {
      const auto& want = fitted->encoding->feature_names;
      std::vector<std::string> have;
      for (std::size_t i = 0; i < cleaned.columns.size(); ++i)
        if (i != cleaned.label_index()) have.push_back(cleaned.columns[i]);
      if (have != want) {
        throw IncompatibleError("data has " + std::to_string(have.size()) +
                                " feature columns, the checkpoint expects " +
                                std::to_string(want.size()) + " with matching names");
      }
      return encode(cleaned, *fitted->encoding);
    }
    return encode(cleaned);
  });
  src.encoding = enc.encoding;
  src.data = from_encoded(enc);
  return src;
}

void check_compatible(const Dataset& ds, const Preprocessing& prep) {
  if (ds.seq_len() != prep.scaler.min.size()) {
    throw IncompatibleError("data has " + std::to_string(ds.seq_len()) +
                            " features, the checkpoint expects " +
                            std::to_string(prep.scaler.min.size()));
  }
  if (ds.codec != prep.codec) {
    throw IncompatibleError("data classes do not match the checkpoint classes");
  }
}

std::pair<Dataset, Dataset> split(const RunConfig& cfg, const Dataset& ds) {
  return in_stage("split", [&] {
    Rng rng = Rng(cfg.train.seed).derive(kSplitStream);
    return stratified_split(ds, cfg.train_frac, rng);
  });
}

Dataset scaled(const Dataset& ds, const ScalerParams& p) {
  Dataset out = ds;
  out.x = apply_scaler(p, ds.x);
  return out;
}

TrainedModel load_model(const std::filesystem::path& path) {
  return in_stage("load", [&] {
    Checkpoint c = load_checkpoint(path);
    if (!c.metadata.contains("preprocessing")) {
      throw FormatError("checkpoint carries no preprocessing metadata");
    }
    return TrainedModel{std::move(c.params), std::move(c.spec),
                        Preprocessing::from_json(c.metadata["preprocessing"])};
  });
}

TrainConfig stored_train_config(const std::filesystem::path& path) {
  const Checkpoint c = load_checkpoint(path);
  return c.metadata.contains("train_config") ? TrainConfig::from_json(c.metadata["train_config"])
                                             : TrainConfig{};
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

json RunConfig::to_json() const {
  json j{{"data", data_path},
         {"synth", use_synth},
         {"synth_classes", synth.n_classes},
         {"synth_per_class", synth.n_per_class},
         {"synth_seq_len", synth.seq_len},
         {"synth_separation", synth.separation},
         {"synth_imbalance", synth.imbalance},
         {"label", label_column},
         {"normal_class", normal_class},
         {"train_frac", train_frac},
         {"variant", variant_id},
         {"custom_variant", custom_variant ? variant_to_json(*custom_variant) : json(nullptr)},
         {"out_dir", out_dir},
         {"eval_on", eval_on},
         {"bench_warmup", bench_warmup},
         {"bench_repeats", bench_repeats},
         {"explain_samples", explain.n_samples},
         {"explain_permutations", explain.n_permutations},
         {"top_k", explain.top_k},
         {"explain_seed", explain.seed},
         {"holdout", holdout},
         {"ablate_ids", ablate_ids}};
  j.update(train.to_json());
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    c.data_path = j.value("data", c.data_path);
    c.use_synth = j.value("synth", c.use_synth);
    c.synth.n_classes = j.value("synth_classes", c.synth.n_classes);
    c.synth.n_per_class = j.value("synth_per_class", c.synth.n_per_class);
    c.synth.seq_len = j.value("synth_seq_len", c.synth.seq_len);
    c.synth.separation = j.value("synth_separation", c.synth.separation);
    c.synth.imbalance = j.value("synth_imbalance", c.synth.imbalance);
    c.label_column = j.value("label", c.label_column);
    c.normal_class = j.value("normal_class", c.normal_class);
    c.train_frac = j.value("train_frac", c.train_frac);
    c.variant_id = j.value("variant", c.variant_id);
    if (j.contains("custom_variant") && !j["custom_variant"].is_null())
      c.custom_variant = variant_from_json(j["custom_variant"]);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.eval_on = j.value("eval_on", c.eval_on);
    c.bench_warmup = j.value("bench_warmup", c.bench_warmup);
    c.bench_repeats = j.value("bench_repeats", c.bench_repeats);
    c.explain.n_samples = j.value("explain_samples", c.explain.n_samples);
    c.explain.n_permutations = j.value("explain_permutations", c.explain.n_permutations);
    c.explain.top_k = j.value("top_k", c.explain.top_k);
    c.explain.seed = j.value("explain_seed", c.explain.seed);
    c.holdout = j.value("holdout", c.holdout);
    c.ablate_ids = j.value("ablate_ids", c.ablate_ids);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train = TrainConfig::from_json(j);
  c.synth.normal_name = c.normal_class;
  if (c.eval_on != "test" && c.eval_on != "all") {
    throw ConfigError("eval_on must be 'test' or 'all', got '" + c.eval_on + "'");
  }
  return c;
}

void RunConfig::validate() const {
  const bool csv = !data_path.empty();
  if (csv == use_synth) {
    throw ConfigError(csv ? "both a data path and synthetic data were requested"
                          : "no data source: give a CSV path or enable synthetic data");
  }
}

// ---------------------------------------------------------------------------
// Preprocessing

json Preprocessing::to_json() const {
  return {{"encoding", encoding ? encoding->to_json() : json(nullptr)},
          {"scaler", scaler.to_json()},
          {"feature_names", feature_names},
          {"classes", codec.classes()}};
}

Preprocessing Preprocessing::from_json(const json& j) {
  Preprocessing p;
  try {
    if (!j.at("encoding").is_null()) p.encoding = Encoding::from_json(j["encoding"]);
    p.scaler = ScalerParams::from_json(j.at("scaler"));
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.codec = LabelCodec(j.at("classes").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("preprocessing metadata: ") + e.what());
  }
  return p;
}

PreparedData prepare_data(const RunConfig& cfg) {
  Source src = load_source(cfg, nullptr);
  PreparedData out;
  out.clean = src.clean;
  auto [tr, te] = split(cfg, src.data);
  out.prep.encoding = src.encoding;
  out.prep.scaler = in_stage("scale", [&] { return fit_scaler(tr.x); });
  out.prep.feature_names = src.data.feature_names;
  out.prep.codec = src.data.codec;
  out.train = scaled(tr, out.prep.scaler);
  out.test = scaled(te, out.prep.scaler);
  return out;
}

PreparedData prepare_data(const RunConfig& cfg, const Preprocessing& fitted) {
  Source src = load_source(cfg, &fitted);
  in_stage("encode", [&] {
    check_compatible(src.data, fitted);
    return 0;
  });
  PreparedData out;
  out.clean = src.clean;
  out.prep = fitted;
  if (cfg.eval_on == "all") {
    out.test = scaled(src.data, fitted.scaler);
    return out;
  }
  auto [tr, te] = split(cfg, src.data);
  out.train = scaled(tr, fitted.scaler);
  out.test = scaled(te, fitted.scaler);
  return out;
}

VariantSpec resolve_variant(const RunConfig& cfg, std::size_t seq_len, std::size_t n_classes) {
  if (cfg.custom_variant) {
    VariantSpec s = *cfg.custom_variant;
    s.seq_len = seq_len;
    s.n_classes = n_classes;
    return s;
  }
  if (cfg.variant_id < 1 || cfg.variant_id > 12) {
    throw ConfigError("variant id must be 1..12, got " + std::to_string(cfg.variant_id));
  }
  return table5_variants(seq_len, n_classes)[static_cast<std::size_t>(cfg.variant_id - 1)].spec;
}

// ---------------------------------------------------------------------------
// Reports

json RunReport::table6() const {
  return {{"Acc", 100.0 * eval.report.accuracy},
          {"Loss", eval.loss},
          {"Pr", 100.0 * eval.report.macro.precision},
          {"Rc", 100.0 * eval.report.macro.recall},
          {"F1", 100.0 * eval.report.macro.f1},
          {"FPR", 100.0 * eval.report.fpr_macro},
          {"InfTime_sec_per_inst", timing.mean_sec_per_instance}};
}

json RunReport::to_json() const {
  return {{"config", config},
          {"variant", variant_name},
          {"param_total", param_total},
          {"history", history.to_json()},
          {"eval", eval.to_json()},
          {"table6", table6()},
          {"timings",
           {{"train_seconds", train_seconds},
            {"eval_seconds", eval_seconds},
            {"inference", timing.to_json()}}},
          {"artifacts", artifacts}};
}

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Commands

RunReport cmd_train(const RunConfig& cfg, TrainedModel* model_out) {
  const PreparedData data = prepare_data(cfg);
  const VariantSpec spec = in_stage("build", [&] {
    VariantSpec s = resolve_variant(cfg, data.train.seq_len(), data.train.n_classes());
    Network{s};
    return s;
  });

  RunReport rep;
  rep.config = cfg.to_json();
  rep.variant_name = spec.name;
  rep.param_total = param_total(spec);

  auto t0 = Clock::now();
  TrainResult tr = in_stage("train", [&] { return train(spec, data.train, data.test, cfg.train); });
  rep.train_seconds = seconds_since(t0);
  rep.history = tr.history;

  t0 = Clock::now();
  rep.eval = in_stage("evaluate", [&] {
    const Tensor probs = predict(tr.params, spec, data.test.x);
    return make_eval_report(probs, data.test.y, data.test.codec.classes(),
                            evaluate_loss(probs, data.test.y, cfg.train));
  });
  rep.eval_seconds = seconds_since(t0);
  rep.timing = in_stage("evaluate", [&] {
    return inference_bench(tr.params, spec, data.test.x, cfg.bench_warmup, cfg.bench_repeats);
  });

  if (!cfg.out_dir.empty()) {
    in_stage("persist", [&] {
      std::filesystem::create_directories(cfg.out_dir);
      const auto ckpt = out_path(cfg, "model.bgid");
      save_checkpoint(tr.params, spec,
                      {{"preprocessing", data.prep.to_json()},
                       {"train_config", cfg.train.to_json()},
                       {"run_config", rep.config}},
                      ckpt);
      rep.artifacts.push_back(ckpt.string());
      const auto hist = out_path(cfg, "history.csv");
      rep.history.write_csv(hist);
      rep.artifacts.push_back(hist.string());
      for (const auto& p : write_roc_csv(rep.eval.roc, rep.eval.class_names, out_path(cfg, "roc")))
        rep.artifacts.push_back(p.string());
      const auto report = out_path(cfg, "report.json");
      rep.artifacts.push_back(report.string());
      write_json(rep.to_json(), report);
      return 0;
    });
  }
  if (model_out) *model_out = TrainedModel{std::move(tr.params), spec, data.prep};
  return rep;
}

EvalReport cmd_evaluate(const std::filesystem::path& checkpoint, const RunConfig& cfg) {
  const TrainedModel m = load_model(checkpoint);
  const PreparedData data = prepare_data(cfg, m.prep);
  const TrainConfig tc = in_stage("load", [&] { return stored_train_config(checkpoint); });
  return in_stage("evaluate", [&] {
    if (data.test.seq_len() != m.spec.seq_len) {
      throw IncompatibleError("data has " + std::to_string(data.test.seq_len()) +
                              " features, the model expects " + std::to_string(m.spec.seq_len));
    }
    const Tensor probs = predict(m.params, m.spec, data.test.x);
    return make_eval_report(probs, data.test.y, data.test.codec.classes(),
                            evaluate_loss(probs, data.test.y, tc));
  });
}

json AblationReport::to_json() const {
  json rows_j = json::array();
  auto cell = [](const AblationCell& c) {
    json j{{"ok", c.ok}};
    if (c.ok) {
      j["Acc"] = 100.0 * c.accuracy;
      j["Loss"] = c.loss;
      j["FPR"] = 100.0 * c.fpr;
    } else {
      j["error"] = c.error;
    }
    return j;
  };
  for (const auto& r : rows) {
    rows_j.push_back({{"id", r.id},
                      {"name", r.name},
                      {"canonical", r.canonical},
                      {"param_total", r.param_total},
                      {"before_balancing", cell(r.before)},
                      {"after_balancing", cell(r.after)}});
  }
  return {{"balancing", balancing}, {"rows", rows_j}};
}

void AblationReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out.precision(10);
  out << "id,name,params,before_acc,before_loss,before_fpr,after_acc,after_loss,after_fpr\n";
  auto cell = [&](const AblationCell& c) {
    if (c.ok)
      out << ',' << 100.0 * c.accuracy << ',' << c.loss << ',' << 100.0 * c.fpr;
    else
      out << ",failed,failed,failed";
  };
  for (const auto& r : rows) {
    out << r.id << ",\"" << r.name << "\"," << r.param_total;
    cell(r.before);
    cell(r.after);
    out << '\n';
  }
}

AblationReport cmd_ablate(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  const auto variants = table5_variants(data.train.seq_len(), data.train.n_classes());
  std::vector<int> ids = cfg.ablate_ids;
  if (ids.empty())
    for (int i = 1; i <= 12; ++i) ids.push_back(i);

  AblationReport rep;
  const Balancing after =
      cfg.train.balancing == Balancing::kNone ? Balancing::kRos : cfg.train.balancing;
  rep.balancing = to_string(after);
  for (int id : ids) {
    if (id < 1 || id > 12) throw ConfigError("ablation id must be 1..12, got " + std::to_string(id));
    const VariantSpec& spec = variants[static_cast<std::size_t>(id - 1)].spec;
    AblationRow row;
    row.id = id;
    row.name = spec.name;
    row.canonical = id == 4;
    auto run = [&](Balancing b) {
      AblationCell cell;
      try {
        row.param_total = param_total(spec);
        TrainConfig tc = cfg.train;
        tc.balancing = b;
        tc.seed = Rng(cfg.train.seed).derive(100 + static_cast<std::uint64_t>(id)).next_u64();
        const TrainResult tr = train(spec, data.train, {}, tc);
        const Tensor probs = predict(tr.params, spec, data.test.x);
        const ClassReport cr = class_report(confusion(data.test.y, argmax_rows(probs), spec.n_classes));
        cell.ok = true;
        cell.accuracy = cr.accuracy;
        cell.fpr = cr.fpr_macro;
        cell.loss = evaluate_loss(probs, data.test.y, tc);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      return cell;
    };
    row.before = run(Balancing::kNone);
    row.after = run(after);
    rep.rows.push_back(std::move(row));
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    rep.write_csv(out_path(cfg, "ablation.csv"));
    write_json({{"config", cfg.to_json()}, {"ablation", rep.to_json()}},
               out_path(cfg, "ablation.json"));
  }
  return rep;
}

json LoaoReport::to_json() const {
  return {{"held_out", held_out},
          {"retained_classes", retained_classes},
          {"train_size", train_size},
          {"held_out_in_train", held_out_in_train},
          {"held_out_test_size", held_out_test_size},
          {"retained_accuracy", retained_accuracy},
          {"zero_day_detection_rate", detection_rate},
          {"combined_accuracy", combined_accuracy},
          {"retained_eval", retained_eval.to_json()}};
}

LoaoReport cmd_loao(const RunConfig& cfg) {
  if (cfg.holdout.empty()) throw ConfigError("leave-one-attack-out needs a held-out class");
  if (cfg.holdout == cfg.normal_class) {
    throw ConfigError("the normal class '" + cfg.normal_class +
                      "' cannot be held out; the protocol withholds attacks");
  }
  const Source src = load_source(cfg, nullptr);
  const LabelCodec& full = src.data.codec;
  const auto held = full.find(cfg.holdout);
  if (!held) throw ConfigError("held-out class '" + cfg.holdout + "' is not in the data");
  if (!full.find(cfg.normal_class)) {
    throw ConfigError("normal class '" + cfg.normal_class + "' is not in the data");
  }
  auto [tr_all, te_all] = split(cfg, src.data);

  std::vector<std::string> kept;
  for (const auto& n : full.classes())
    if (n != cfg.holdout) kept.push_back(n);
  const LabelCodec codec(kept);
  auto remap = [&](const Dataset& ds, std::vector<std::size_t>& held_rows) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i)
      (ds.y[i] == *held ? held_rows : keep).push_back(i);
    Dataset out = ds.subset(keep);
    for (auto& y : out.y) y = codec.index(full.name(static_cast<std::size_t>(y)));
    out.codec = codec;
    return out;
  };
  std::vector<std::size_t> held_train, held_test;
  Dataset train_ds = remap(tr_all, held_train);
  Dataset test_ds = remap(te_all, held_test);
  // Held-out rows of both split parts are scored; none is ever trained on.
  Dataset zero_day = tr_all.subset(held_train);
  {
    const Dataset more = te_all.subset(held_test);
    Tensor x({zero_day.size() + more.size(), src.data.seq_len(), 1});
    std::copy(zero_day.x.data().begin(), zero_day.x.data().end(), x.data().begin());
    std::copy(more.x.data().begin(), more.x.data().end(),
              x.data().begin() + static_cast<std::ptrdiff_t>(zero_day.x.size()));
    zero_day.x = std::move(x);
    zero_day.y.insert(zero_day.y.end(), more.y.begin(), more.y.end());
  }

  LoaoReport rep;
  rep.held_out = cfg.holdout;
  rep.retained_classes = kept;
  rep.train_size = train_ds.size();
  rep.held_out_in_train = static_cast<std::size_t>(
      std::count_if(train_ds.y.begin(), train_ds.y.end(),
                    [&](int y) { return codec.name(static_cast<std::size_t>(y)) == cfg.holdout; }));
  if (rep.held_out_in_train != 0) throw Error("held-out class leaked into the training set");
  rep.held_out_test_size = zero_day.size();

  const ScalerParams scaler = in_stage("scale", [&] { return fit_scaler(train_ds.x); });
  train_ds = scaled(train_ds, scaler);
  test_ds = scaled(test_ds, scaler);
  zero_day = scaled(zero_day, scaler);

  const VariantSpec spec = in_stage("build", [&] {
    return resolve_variant(cfg, train_ds.seq_len(), codec.size());
  });
  const TrainResult tr = in_stage("train", [&] { return train(spec, train_ds, test_ds, cfg.train); });
  in_stage("evaluate", [&] {
    const Tensor probs = predict(tr.params, spec, test_ds.x);
    rep.retained_eval = make_eval_report(probs, test_ds.y, kept,
                                         evaluate_loss(probs, test_ds.y, cfg.train));
    rep.retained_accuracy = rep.retained_eval.report.accuracy;
    const int normal = codec.index(cfg.normal_class);
    std::size_t flagged = 0;
    if (zero_day.size() > 0) {
      for (int p : argmax_rows(predict(tr.params, spec, zero_day.x))) flagged += p != normal;
      rep.detection_rate = static_cast<double>(flagged) / static_cast<double>(zero_day.size());
    }
    const double correct = rep.retained_accuracy * static_cast<double>(test_ds.size()) +
                           static_cast<double>(flagged);
    rep.combined_accuracy = correct / static_cast<double>(test_ds.size() + zero_day.size());
    return 0;
  });
  if (!cfg.out_dir.empty()) {
    write_json({{"config", cfg.to_json()}, {"loao", rep.to_json()}},
               out_path(cfg, "loao_" + cfg.holdout + ".json"));
  }
  return rep;
}

std::vector<LoaoReport> cmd_loao_sweep(const RunConfig& cfg) {
  const Source src = load_source(cfg, nullptr);
  std::vector<LoaoReport> out;
  for (const auto& name : src.data.codec.classes()) {
    if (name == cfg.normal_class) continue;
    RunConfig c = cfg;
    c.holdout = name;
    out.push_back(cmd_loao(c));
  }
  return out;
}

Attribution cmd_explain(const std::filesystem::path& checkpoint, const RunConfig& cfg) {
  const TrainedModel m = load_model(checkpoint);
  RunConfig c = cfg;
  c.eval_on = "test";
  const PreparedData data = prepare_data(c, m.prep);
  Attribution a = in_stage("explain", [&] {
    return attribution_summary(m.params, m.spec, data.train, data.test, cfg.explain);
  });
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    a.write_csv(out_path(cfg, "attribution.csv"));
    write_json({{"config", cfg.to_json()}, {"attribution", a.to_json(cfg.explain.top_k)}},
               out_path(cfg, "attribution.json"));
  }
  return a;
}

InferenceTiming cmd_bench(const std::filesystem::path& checkpoint, const RunConfig& cfg) {
  const TrainedModel m = load_model(checkpoint);
  const PreparedData data = prepare_data(cfg, m.prep);
  InferenceTiming t = in_stage("bench", [&] {
    return inference_bench(m.params, m.spec, data.test.x, cfg.bench_warmup, cfg.bench_repeats);
  });
  if (!cfg.out_dir.empty()) {
    write_json({{"config", cfg.to_json()}, {"inference", t.to_json()}}, out_path(cfg, "bench.json"));
  }
  return t;
}

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_csv) {
  RunConfig c = cfg;
  c.use_synth = true;
  c.data_path.clear();
  const Dataset ds = load_source(c, nullptr).data;
  std::vector<std::string> header = ds.feature_names;
  header.push_back(cfg.label_column);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(ds.size());
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<std::string> r;
    for (double v : ds.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      r.emplace_back(buf, res.ptr);
    }
    r.push_back(ds.codec.name(static_cast<std::size_t>(ds.y[i])));
    rows.push_back(std::move(r));
  }
  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  in_stage("persist", [&] {
    write_csv(out_csv, header, rows);
    return 0;
  });
}

std::string cmd_inspect(const std::string& target, std::size_t seq_len, std::size_t n_classes) {
  VariantSpec spec;
  int id = 0;
  const auto [ptr, ec] = std::from_chars(target.data(), target.data() + target.size(), id);
  if (target == "bigat") {
    spec = bigat_spec(seq_len, n_classes);
  } else if (ec == std::errc() && ptr == target.data() + target.size()) {
    if (id < 1 || id > 12) throw ConfigError("variant id must be 1..12, got " + target);
    spec = table5_variants(seq_len, n_classes)[static_cast<std::size_t>(id - 1)].spec;
  } else {
    spec = load_model(target).spec;
  }
  return spec.name + "\n" + format_summary(Network(spec));
}

}  // namespace bigat
