// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tripscope/dataset.hpp"

namespace tripscope::learn {

/// Gain ratio of the binary split `x <= threshold`, in bits. Zero when one
/// side is empty or the labels are pure.
double gain_ratio(std::span<const CognitiveLabel> labels, std::span<const double> x,
                  double threshold);

/// Extra errors added to `errors` observed among `cases` to form the upper
/// confidence bound used by pessimistic pruning (confidence factor `cf`).
double added_errors(double cases, double errors, double cf);

struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  CognitiveLabel cls = CognitiveLabel::mci_ad;
  /// Training weight per class reaching this node.
  std::array<double, 2> class_weight{};
  /// Number of training cases (not weights) reaching this node.
  int n_cases = 0;

  bool is_leaf() const { return feature < 0; }
  double weight() const { return class_weight[0] + class_weight[1]; }
};

struct TreeOptions {
  /// Minimum weight on each side of a split.
  double min_cases = 2;
  bool prune = true;
  double confidence = 0.25;
  /// Features tried per node; 0 or >= n_features means all of them.
  int mtry = 0;
  /// Subtract log2(cut points)/cases from continuous-split gain.
  bool threshold_penalty = true;
};

/// Binary classification tree over continuous features. Splits send
/// `x[feature] <= threshold` to the left child.
/// Column-major copy of a dataset plus its row indices sorted by each
/// feature (stable by row). Reusable across trees grown on the same data.
struct FeatureOrder {
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::uint32_t>> order;
};
FeatureOrder presort(const Dataset& data);

class DecisionTree {
 public:
  /// Grows a tree on `cases` (row indices into `data`, repeats allowed) with
  /// per-case `weights`. `rng` is only consulted when options.mtry subsamples
  /// features.
  static DecisionTree grow(const Dataset& data, std::span<const std::size_t> cases,
                           std::span<const double> weights, const TreeOptions& options,
                           std::mt19937_64* rng = nullptr,
                           const FeatureOrder* order = nullptr);

  /// Unit weights, every row once.
  static DecisionTree grow(const Dataset& data, const TreeOptions& options);

  CognitiveLabel predict(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  std::size_t leaf_count() const;

  /// Sum over leaves of observed plus added errors.
  double pessimistic_errors(double cf) const;

  /// Per-feature sum of the percentage of training cases passing through
  /// nodes that split on that feature.
  std::vector<double> usage(std::size_t n_features) const;

 private:
  std::vector<TreeNode> nodes_;

  friend class TreeBuilder;
};

}  // namespace tripscope::learn
