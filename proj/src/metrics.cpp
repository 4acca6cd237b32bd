// SPDX-License-Identifier: Apache-2.0
#include "bigat/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <chrono>
#include <fstream>
#include <numeric>

#include "bigat/error.hpp"

namespace bigat {

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::row_sum(std::size_t t) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < c; ++p) s += at(t, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t p) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < c; ++t) s += at(t, p);
  return s;
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
  std::vector<std::vector<double>> out(c, std::vector<double>(c, 0.0));
  for (std::size_t t = 0; t < c; ++t) {
    const std::size_t n = row_sum(t);
    if (n == 0) continue;
    for (std::size_t p = 0; p < c; ++p)
      out[t][p] = static_cast<double>(at(t, p)) / static_cast<double>(n);
  }
  return out;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          std::size_t c) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion: " + std::to_string(y_true.size()) + " labels but " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm{c, std::vector<std::size_t>(c * c, 0)};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= c || static_cast<std::size_t>(p) >= c) {
      throw DataError("confusion: label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                      ") outside [0, " + std::to_string(c) + ")");
    }
    ++cm.counts[static_cast<std::size_t>(t) * c + static_cast<std::size_t>(p)];
  }
  return cm;
}

std::vector<int> argmax_rows(const Tensor& probs) {
  if (probs.rank() != 2) throw ShapeError("argmax_rows: expected a matrix, got " + shape_str(probs.shape()));
  std::vector<int> out(probs.dim(0));
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.dim(1); ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassReport class_report(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (cm.c == 0 || total == 0) throw DataError("class_report: empty confusion matrix");
  ClassReport r;
  r.total = total;
  std::size_t trace = 0, fp_all = 0, tn_all = 0;
  for (std::size_t k = 0; k < cm.c; ++k) {
    const std::size_t tp = cm.at(k, k);
    const std::size_t support = cm.row_sum(k);
    const std::size_t predicted = cm.col_sum(k);
    const std::size_t fp = predicted - tp;
    const std::size_t tn = total - support - fp;
    ClassStats s;
    s.support = support;
    s.precision = ratio(tp, predicted, s.precision_undefined);
    s.recall = ratio(tp, support, s.recall_undefined);
    s.f1 = s.precision + s.recall > 0.0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.fpr = ratio(fp, fp + tn, s.fpr_undefined);
    r.classes.push_back(s);
    trace += tp;
    fp_all += fp;
    tn_all += tn;
  }
  const double c = static_cast<double>(cm.c);
  for (const auto& s : r.classes) {
    const double w = static_cast<double>(s.support) / static_cast<double>(total);
    r.macro.precision += s.precision / c;
    r.macro.recall += s.recall / c;
    r.macro.f1 += s.f1 / c;
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
    r.fpr_macro += s.fpr / c;
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  bool unused = false;
  r.fpr_micro = ratio(fp_all, fp_all + tn_all, unused);
  return r;
}

double fpr_macro(const ConfusionMatrix& cm) { return class_report(cm).fpr_macro; }
double fpr_micro(const ConfusionMatrix& cm) { return class_report(cm).fpr_micro; }

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw DataError("roc_curve: length mismatch");
  RocCurve curve;
  const std::size_t n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t n_neg = positive.size() - n_pos;
  curve.defined = n_pos > 0 && n_neg > 0;
  if (!curve.defined) return curve;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = static_cast<double>(n_pos), N = static_cast<double>(n_neg);
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  // Trapezoids on integer counts keep the sum exact until the final division.
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    while (i < order.size() && scores[order[i]] == s) {
      positive[order[i]] ? ++tp : ++fp;
      ++i;
    }
    area += static_cast<double>(fp - fp0) * static_cast<double>(tp0 + tp) / 2.0;
    curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, s});
  }
  curve.auc = area / (P * N);
  return curve;
}

std::vector<RocCurve> roc_auc_ovr(const std::vector<int>& y_true, const Tensor& probs) {
  if (probs.rank() != 2) throw ShapeError("roc_auc_ovr: expected a matrix, got " + shape_str(probs.shape()));
  if (probs.dim(0) != y_true.size()) throw DataError("roc_auc_ovr: length mismatch");
  std::vector<RocCurve> out;
  for (std::size_t k = 0; k < probs.dim(1); ++k) {
    std::vector<double> s(y_true.size());
    std::vector<bool> pos(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      s[i] = probs.at(i, k);
      pos[i] = y_true[i] == static_cast<int>(k);
    }
    RocCurve c = roc_curve(s, pos);
    c.class_index = k;
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<double> macro_auc(const std::vector<RocCurve>& curves) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : curves)
    if (c.defined) sum += c.auc, ++n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<std::filesystem::path> write_roc_csv(const std::vector<RocCurve>& curves,
                                                 const std::vector<std::string>& class_names,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& c : curves) {
    if (!c.defined) continue;
    std::string name = c.class_index < class_names.size() ? class_names[c.class_index]
                                                          : std::to_string(c.class_index);
    for (auto& ch : name)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
    const auto path = dir / ("roc_" + name + ".csv");
    std::ofstream out(path);
    if (!out) throw FileError("cannot write " + path.string());
    out.precision(17);
    out << "fpr,tpr,threshold\n";
    for (const auto& p : c.points) out << p.fpr << ',' << p.tpr << ',' << p.threshold << '\n';
    paths.push_back(path);
  }
  return paths;
}

nlohmann::json InferenceTiming::to_json() const {
  return {{"mean_sec_per_instance", mean_sec_per_instance},
          {"median_sec_per_instance", median_sec_per_instance},
          {"p95_sec_per_instance", p95_sec_per_instance},
          {"batch_size", batch_size},
          {"n_instances", n_instances},
          {"repeats", repeats}};
}

InferenceTiming inference_bench(const ModelParams& params, const VariantSpec& spec, const Tensor& x,
                                std::size_t warmup, std::size_t repeats) {
  if (repeats == 0) throw ConfigError("inference_bench: repeats must be at least 1");
  if (x.rank() != 3 || x.dim(0) == 0) throw DataError("inference_bench: no instances to time");
  const std::size_t n = x.dim(0);
  for (std::size_t i = 0; i < warmup; ++i) (void)predict(params, spec, x);
  std::vector<double> per;
  per.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor p = predict(params, spec, x);
    const auto t1 = std::chrono::steady_clock::now();
    (void)p;
    per.push_back(std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(n));
  }
  InferenceTiming t;
  t.n_instances = n;
  t.repeats = repeats;
  t.batch_size = std::min<std::size_t>(n, 256);
  t.mean_sec_per_instance = std::accumulate(per.begin(), per.end(), 0.0) / per.size();
  std::sort(per.begin(), per.end());
  const std::size_t m = per.size();
  t.median_sec_per_instance = m % 2 ? per[m / 2] : 0.5 * (per[m / 2 - 1] + per[m / 2]);
  t.p95_sec_per_instance = per[std::min(m - 1, static_cast<std::size_t>(std::ceil(0.95 * m)) - 1)];
  return t;
}

EvalReport make_eval_report(const Tensor& probs, const std::vector<int>& y_true,
                            const std::vector<std::string>& class_names, double loss) {
  EvalReport r;
  r.class_names = class_names;
  r.confusion = confusion(y_true, argmax_rows(probs), probs.dim(1));
  r.report = class_report(r.confusion);
  r.loss = loss;
  r.roc = roc_auc_ovr(y_true, probs);
  r.auc_macro = macro_auc(r.roc);
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t k = 0; k < report.classes.size(); ++k) {
    const auto& s = report.classes[k];
    nlohmann::json row{{"class", k < class_names.size() ? class_names[k] : std::to_string(k)},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"fpr", s.fpr},
                       {"support", s.support}};
    nlohmann::json flags = nlohmann::json::array();
    if (s.precision_undefined) flags.push_back("precision_undefined");
    if (s.recall_undefined) flags.push_back("recall_undefined");
    if (s.fpr_undefined) flags.push_back("fpr_undefined");
    if (!flags.empty()) row["flags"] = flags;
    if (k < roc.size() && roc[k].defined)
      row["auc"] = roc[k].auc;
    else
      row["auc"] = nullptr;
    per_class.push_back(row);
  }
  nlohmann::json cm = nlohmann::json::array();
  for (std::size_t t = 0; t < confusion.c; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < confusion.c; ++p) row.push_back(confusion.at(t, p));
    cm.push_back(row);
  }
  auto avg = [](const Averages& a) {
    return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
  };
  return {{"classes", per_class},
          {"accuracy", report.accuracy},
          {"macro_avg", avg(report.macro)},
          {"weighted_avg", avg(report.weighted)},
          {"loss", loss},
          {"fpr_macro", report.fpr_macro},
          {"fpr_micro", report.fpr_micro},
          {"auc_macro", auc_macro ? nlohmann::json(*auc_macro) : nlohmann::json(nullptr)},
          {"support", report.total},
          {"confusion", cm},
          {"confusion_normalized", confusion.normalized()}};
}

}  // namespace bigat
