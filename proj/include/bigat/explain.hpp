// SPDX-License-Identifier: Apache-2.0
//
// Shapley feature attribution over the flattened feature axis. Absent
// features take the background mean (a single-reference baseline), so the
// values explain f(x) − f(baseline).
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bigat/data.hpp"
#include "bigat/model.hpp"
#include "bigat/rng.hpp"
#include "bigat/tensor.hpp"

namespace bigat {

/// Maps a batch of feature rows [m × F] to outputs [m × K].
using BatchValueFn = std::function<Tensor(const Tensor&)>;

inline constexpr std::size_t kExactShapleyMaxFeatures = 12;

/// Exact values [F × K] from all 2^F coalitions. Throws ConfigError above
/// kExactShapleyMaxFeatures features.
Tensor shapley_exact_small(const BatchValueFn& f, const std::vector<double>& x,
                           const std::vector<double>& baseline);

struct ShapleyEstimate {
  Tensor values;     // [F × K]
  Tensor std_error;  // [F × K], sample std / √n
  std::size_t n_permutations = 0;
};

/// Monte Carlo permutation estimator; unbiased for the exact value under the
/// same baseline. Throws ConfigError when n_permutations is 0.
ShapleyEstimate shapley_permutation(const BatchValueFn& f, const std::vector<double>& x,
                                    const std::vector<double>& baseline,
                                    std::size_t n_permutations, Rng& rng);

/// Per-feature means of the background rows. Throws DataError when empty.
std::vector<double> background_mean(const Dataset& background);

/// Class-probability value function of a trained network.
BatchValueFn model_value_fn(const ModelParams& params, const VariantSpec& spec);

/// Attribution of one instance toward `class_index`.
std::vector<double> shapley_estimate(const ModelParams& params, const VariantSpec& spec,
                                     const Dataset& background, const std::vector<double>& x,
                                     std::size_t class_index, std::size_t n_permutations,
                                     Rng& rng);

struct AttributionSettings {
  std::size_t n_samples = 200;
  std::size_t n_permutations = 2000;
  std::size_t top_k = 10;
  std::uint64_t seed = 7;
};

struct Attribution {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  Tensor mean_abs;  // [F × C]
  std::size_t n_samples = 0;
  std::size_t n_permutations = 0;

  /// Feature indices by decreasing mean |value| for one class; ties by index.
  std::vector<std::size_t> ranking(std::size_t class_index) const;
  /// Same, summed over classes.
  std::vector<std::size_t> overall_ranking() const;
  nlohmann::json to_json(std::size_t top_k) const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Mean |Shapley| per (feature, class) over up to n_samples rows of
/// `sample` (a seeded random subset when larger).
Attribution attribution_summary(const BatchValueFn& f, const Dataset& background,
                                const Dataset& sample, const AttributionSettings& settings);
Attribution attribution_summary(const ModelParams& params, const VariantSpec& spec,
                                const Dataset& background, const Dataset& sample,
                                const AttributionSettings& settings);

}  // namespace bigat
