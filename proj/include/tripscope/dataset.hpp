// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tripscope/common.hpp"

namespace tripscope::learn {

class TrainingError : public Error {
 public:
  using Error::Error;
};

class PredictionError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class FoldError : public Error {
 public:
  using Error::Error;
};

/// Row-major feature matrix with one class label per row.
class Dataset {
 public:
  explicit Dataset(std::vector<std::string> feature_names);

  /// Throws TrainingError on a width mismatch or a non-finite value.
  void add(std::span<const double> x, CognitiveLabel y);

  std::size_t size() const { return labels_.size(); }
  std::size_t n_features() const { return names_.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_features(), n_features()};
  }
  double at(std::size_t i, std::size_t feature) const {
    return values_[i * n_features() + feature];
  }
  CognitiveLabel label(std::size_t i) const { return labels_[i]; }
  const std::vector<CognitiveLabel>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  /// Indexed by static_cast<int>(CognitiveLabel).
  std::array<std::size_t, 2> class_counts() const;
  bool has_both_classes() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  /// Same rows with every label replaced.
  Dataset relabeled(std::span<const CognitiveLabel> labels) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<CognitiveLabel> labels_;
};

}  // namespace tripscope::learn
