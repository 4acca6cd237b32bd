// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include "bigat/data.hpp"
#include "bigat/error.hpp"

namespace bigat {
namespace {

std::vector<std::vector<std::size_t>> members_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.y[i]).push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw DataError("cannot balance: class '" + ds.codec.name(c) + "' has no samples");
    }
  }
  return by_class;
}

std::size_t majority(const std::vector<std::vector<std::size_t>>& by_class) {
  std::size_t m = 0;
  for (const auto& v : by_class) m = std::max(m, v.size());
  return m;
}

Dataset with_rows(const Dataset& ds, const std::vector<std::vector<double>>& extra,
                  const std::vector<int>& extra_y) {
  const std::size_t T = ds.seq_len(), n = ds.size();
  Dataset out;
  out.codec = ds.codec;
  out.feature_names = ds.feature_names;
  out.x = Tensor({n + extra.size(), T, 1});
  std::copy(ds.x.data().begin(), ds.x.data().end(), out.x.data().begin());
  for (std::size_t r = 0; r < extra.size(); ++r)
    std::copy(extra[r].begin(), extra[r].end(), out.x.data().begin() + (n + r) * T);
  out.y = ds.y;
  out.y.insert(out.y.end(), extra_y.begin(), extra_y.end());
  return out;
}

}  // namespace

Dataset ros_balance(const Dataset& ds, Rng& rng) {
  const auto by_class = members_by_class(ds);
  const std::size_t target = majority(by_class);
  std::vector<std::vector<double>> extra;
  std::vector<int> extra_y;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    for (std::size_t k = members.size(); k < target; ++k) {
      extra.push_back(ds.row(members[rng.below(members.size())]));
      extra_y.push_back(static_cast<int>(c));
    }
  }
  return with_rows(ds, extra, extra_y);
}

Dataset smote_balance(const Dataset& ds, Rng& rng, const SmoteOptions& options,
                      SmoteReport* report) {
  if (options.k < 1) throw ConfigError("SMOTE needs k >= 1");
  const auto by_class = members_by_class(ds);
  const std::size_t target = majority(by_class);
  std::vector<std::vector<double>> extra;
  std::vector<int> extra_y;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    if (members.size() >= target) continue;
    if (members.size() == 1) {
      if (report) {
        report->warnings.push_back("class '" + ds.codec.name(c) +
                                   "' has a single sample; duplicating instead of SMOTE");
      }
      for (std::size_t k = 1; k < target; ++k) {
        extra.push_back(ds.row(members[0]));
        extra_y.push_back(static_cast<int>(c));
      }
      continue;
    }
    const std::size_t k = std::min(options.k, members.size() - 1);
    std::vector<std::vector<double>> rows;
    for (auto i : members) rows.push_back(ds.row(i));

    // k nearest same-class neighbours of each member, ties by index.
    std::vector<std::vector<std::size_t>> neighbours(rows.size());
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      dist.clear();
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (a == b) continue;
        double d2 = 0.0;
        for (std::size_t f = 0; f < rows[a].size(); ++f) {
          const double diff = rows[a][f] - rows[b][f];
          d2 += diff * diff;
        }
        dist.emplace_back(d2, b);
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (std::size_t j = 0; j < k; ++j) neighbours[a].push_back(dist[j].second);
    }

    for (std::size_t n = members.size(); n < target; ++n) {
      const std::size_t a = rng.below(rows.size());
      const std::size_t b = neighbours[a][rng.below(k)];
      const double lambda = options.fixed_lambda ? *options.fixed_lambda : rng.uniform();
      std::vector<double> s(rows[a].size());
      for (std::size_t f = 0; f < s.size(); ++f) s[f] = rows[a][f] + lambda * (rows[b][f] - rows[a][f]);
      extra.push_back(std::move(s));
      extra_y.push_back(static_cast<int>(c));
    }
  }
  return with_rows(ds, extra, extra_y);
}

Dataset synth_generate(const SynthConfig& cfg, Rng& rng) {
  if (cfg.n_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (cfg.seq_len < 4) throw ConfigError("synthetic data needs at least 4 features");
  std::vector<std::string> names{cfg.normal_name};
  for (std::size_t c = 1; c < cfg.n_classes; ++c) names.push_back("Attack_" + std::to_string(c));
  LabelCodec codec = LabelCodec::fit(names);
  if (codec.size() != cfg.n_classes) throw ConfigError("synthetic class names collide");

  const std::size_t T = cfg.seq_len;
  std::vector<std::vector<double>> prototypes(cfg.n_classes, std::vector<double>(T));
  for (auto& p : prototypes)
    for (auto& v : p) v = rng.bernoulli(0.5) ? 1.0 : -1.0;

  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    const double mult = c < cfg.imbalance.size() ? cfg.imbalance[c] : 1.0;
    sizes.push_back(std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(mult * static_cast<double>(cfg.n_per_class)))));
  }
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  Dataset ds;
  ds.codec = codec;
  ds.feature_names = default_feature_names(T);
  ds.x = Tensor({n, T, 1});
  std::size_t r = 0;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    const int label = codec.index(names[c]);
    for (std::size_t k = 0; k < sizes[c]; ++k, ++r) {
      for (std::size_t f = 0; f < T; ++f)
        ds.x[r * T + f] = cfg.separation * prototypes[c][f] + rng.normal();
      ds.y.push_back(label);
    }
  }
  return ds;
}

}  // namespace bigat
