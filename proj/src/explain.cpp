// SPDX-License-Identifier: Apache-2.0
#include "bigat/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "bigat/error.hpp"

namespace bigat {
namespace {

void check_inputs(const std::vector<double>& x, const std::vector<double>& baseline) {
  if (x.empty()) throw DataError("shapley: instance has no features");
  if (x.size() != baseline.size()) {
    throw ShapeError("shapley: instance has " + std::to_string(x.size()) +
                     " features, baseline has " + std::to_string(baseline.size()));
  }
}

Tensor evaluate(const BatchValueFn& f, const Tensor& rows) {
  Tensor out = f(rows);
  if (out.rank() != 2 || out.dim(0) != rows.dim(0)) {
    throw ShapeError("shapley: value function returned " + shape_str(out.shape()) + " for " +
                     std::to_string(rows.dim(0)) + " rows");
  }
  return out;
}

}  // namespace

Tensor shapley_exact_small(const BatchValueFn& f, const std::vector<double>& x,
                           const std::vector<double>& baseline) {
  check_inputs(x, baseline);
  const std::size_t F = x.size();
  if (F > kExactShapleyMaxFeatures) {
    throw ConfigError("exact Shapley enumeration is capped at " +
                      std::to_string(kExactShapleyMaxFeatures) + " features, got " +
                      std::to_string(F));
  }
  const std::size_t n_coal = std::size_t{1} << F;
  Tensor rows({n_coal, F});
  for (std::size_t s = 0; s < n_coal; ++s)
    for (std::size_t i = 0; i < F; ++i) rows.at(s, i) = (s >> i) & 1 ? x[i] : baseline[i];
  const Tensor v = evaluate(f, rows);
  const std::size_t K = v.dim(1);

  // weight(|S|) = |S|! (F − |S| − 1)! / F!
  std::vector<double> weight(F);
  for (std::size_t k = 0; k < F; ++k)
    weight[k] = std::exp(std::lgamma(k + 1.0) + std::lgamma(double(F - k)) - std::lgamma(F + 1.0));

  Tensor phi({F, K});
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t s = 0; s < n_coal; ++s) {
      if ((s >> i) & 1) continue;
      const std::size_t with = s | (std::size_t{1} << i);
      const double w = weight[static_cast<std::size_t>(std::popcount(s))];
      for (std::size_t k = 0; k < K; ++k) phi.at(i, k) += w * (v.at(with, k) - v.at(s, k));
    }
  return phi;
}

ShapleyEstimate shapley_permutation(const BatchValueFn& f, const std::vector<double>& x,
                                    const std::vector<double>& baseline,
                                    std::size_t n_permutations, Rng& rng) {
  check_inputs(x, baseline);
  if (n_permutations == 0) throw ConfigError("shapley: n_permutations must be at least 1");
  const std::size_t F = x.size();
  std::vector<std::size_t> order(F);
  Tensor rows({F + 1, F});
  Tensor sum, sum_sq;
  for (std::size_t p = 0; p < n_permutations; ++p) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    // row r has the first r features of the ordering switched on
    std::vector<double> z = baseline;
    for (std::size_t i = 0; i < F; ++i) rows.at(0, i) = z[i];
    for (std::size_t r = 0; r < F; ++r) {
      z[order[r]] = x[order[r]];
      for (std::size_t i = 0; i < F; ++i) rows.at(r + 1, i) = z[i];
    }
    const Tensor v = evaluate(f, rows);
    const std::size_t K = v.dim(1);
    if (sum.size() == 0) {
      sum = Tensor({F, K});
      sum_sq = Tensor({F, K});
    }
    for (std::size_t r = 0; r < F; ++r)
      for (std::size_t k = 0; k < K; ++k) {
        const double d = v.at(r + 1, k) - v.at(r, k);
        sum.at(order[r], k) += d;
        sum_sq.at(order[r], k) += d * d;
      }
  }
  const double n = static_cast<double>(n_permutations);
  ShapleyEstimate est;
  est.n_permutations = n_permutations;
  est.values = sum;
  scale_inplace(est.values, 1.0 / n);
  est.std_error = Tensor(sum.shape());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = est.values[i];
    const double var = n > 1 ? std::max(0.0, (sum_sq[i] - n * mean * mean) / (n - 1)) : 0.0;
    est.std_error[i] = std::sqrt(var / n);
  }
  return est;
}

std::vector<double> background_mean(const Dataset& background) {
  if (background.size() == 0) throw DataError("shapley: background sample is empty");
  const std::size_t F = background.x.size() / background.size();
  std::vector<double> m(F, 0.0);
  for (std::size_t i = 0; i < background.size(); ++i)
    for (std::size_t f = 0; f < F; ++f) m[f] += background.x[i * F + f];
  for (auto& v : m) v /= static_cast<double>(background.size());
  return m;
}

BatchValueFn model_value_fn(const ModelParams& params, const VariantSpec& spec) {
  return [&params, spec](const Tensor& rows) {
    return predict(params, spec, rows.reshaped({rows.dim(0), rows.dim(1), 1}));
  };
}

std::vector<double> shapley_estimate(const ModelParams& params, const VariantSpec& spec,
                                     const Dataset& background, const std::vector<double>& x,
                                     std::size_t class_index, std::size_t n_permutations,
                                     Rng& rng) {
  if (class_index >= spec.n_classes) {
    throw ConfigError("class index " + std::to_string(class_index) + " outside the " +
                      std::to_string(spec.n_classes) + " model classes");
  }
  const ShapleyEstimate est = shapley_permutation(model_value_fn(params, spec), x,
                                                  background_mean(background), n_permutations, rng);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = est.values.at(i, class_index);
  return out;
}

namespace {

std::vector<std::size_t> rank_by(const std::vector<double>& score) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return idx;
}

}  // namespace

std::vector<std::size_t> Attribution::ranking(std::size_t class_index) const {
  std::vector<double> s(mean_abs.dim(0));
  for (std::size_t f = 0; f < s.size(); ++f) s[f] = mean_abs.at(f, class_index);
  return rank_by(s);
}

std::vector<std::size_t> Attribution::overall_ranking() const {
  std::vector<double> s(mean_abs.dim(0), 0.0);
  for (std::size_t f = 0; f < s.size(); ++f)
    for (std::size_t k = 0; k < mean_abs.dim(1); ++k) s[f] += mean_abs.at(f, k);
  return rank_by(s);
}

nlohmann::json Attribution::to_json(std::size_t top_k) const {
  auto top = [&](const std::vector<std::size_t>& order, std::size_t k) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t r = 0; r < std::min(top_k, order.size()); ++r) {
      double v = 0.0;
      if (k == SIZE_MAX)
        for (std::size_t c = 0; c < mean_abs.dim(1); ++c) v += mean_abs.at(order[r], c);
      else
        v = mean_abs.at(order[r], k);
      arr.push_back({{"feature", feature_names[order[r]]}, {"mean_abs_value", v}});
    }
    return arr;
  };
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < class_names.size(); ++k) per_class[class_names[k]] = top(ranking(k), k);
  return {{"n_samples", n_samples},
          {"n_permutations", n_permutations},
          {"top_k", top_k},
          {"overall", top(overall_ranking(), SIZE_MAX)},
          {"per_class", per_class}};
}

void Attribution::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out.precision(17);
  out << "feature,class,mean_abs_value\n";
  for (std::size_t f = 0; f < feature_names.size(); ++f)
    for (std::size_t k = 0; k < class_names.size(); ++k)
      out << feature_names[f] << ',' << class_names[k] << ',' << mean_abs.at(f, k) << '\n';
}

Attribution attribution_summary(const BatchValueFn& f, const Dataset& background,
                                const Dataset& sample, const AttributionSettings& settings) {
  if (sample.size() == 0) throw DataError("attribution: evaluation sample is empty");
  if (settings.n_samples == 0) throw ConfigError("attribution: n_samples must be at least 1");
  const std::vector<double> base = background_mean(background);
  Rng rng(settings.seed);
  std::vector<std::size_t> rows(sample.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (rows.size() > settings.n_samples) {
    rng.shuffle(rows);
    rows.resize(settings.n_samples);
  }
  Attribution a;
  a.n_samples = rows.size();
  a.n_permutations = settings.n_permutations;
  a.feature_names = sample.feature_names.empty() ? default_feature_names(base.size())
                                                 : sample.feature_names;
  for (std::size_t r : rows) {
    Rng perm_rng = rng.derive(r);
    const ShapleyEstimate est =
        shapley_permutation(f, sample.row(r), base, settings.n_permutations, perm_rng);
    if (a.mean_abs.size() == 0) a.mean_abs = Tensor(est.values.shape());
    for (std::size_t i = 0; i < est.values.size(); ++i) a.mean_abs[i] += std::abs(est.values[i]);
  }
  scale_inplace(a.mean_abs, 1.0 / static_cast<double>(rows.size()));
  const std::size_t K = a.mean_abs.dim(1);
  a.class_names = sample.codec.size() == K ? sample.codec.classes() : std::vector<std::string>{};
  for (std::size_t k = a.class_names.size(); k < K; ++k) a.class_names.push_back(std::to_string(k));
  return a;
}

Attribution attribution_summary(const ModelParams& params, const VariantSpec& spec,
                                const Dataset& background, const Dataset& sample,
                                const AttributionSettings& settings) {
  if (sample.seq_len() != spec.seq_len) {
    throw IncompatibleError("model expects " + std::to_string(spec.seq_len) +
                            " features, data has " + std::to_string(sample.seq_len()));
  }
  return attribution_summary(model_value_fn(params, spec), background, sample, settings);
}

}  // namespace bigat
