// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tripscope/dataset.hpp"
#include "tripscope/svm.hpp"
#include "tripscope/tree.hpp"

namespace tripscope::learn {

/// Boosted gain-ratio trees in the style of C5.0.
struct C50Params {
  int trials = 1;
  double min_cases = 2;
  double confidence = 0.25;
};

struct RfParams {
  int trees = 500;
  int mtry = 3;
  /// Disabled only by tests that compare a one-tree forest with a plain tree.
  bool bootstrap = true;
};

using HyperParams = std::variant<C50Params, RfParams, SvmParams>;

enum class ModelKind { c50, rf, svm };

std::string_view to_string(ModelKind kind);
ModelKind kind_of(const HyperParams& hp);
std::string describe(const HyperParams& hp);

/// Orders grid points from least to most complex: fewer trials, fewer trees
/// or features per split, smaller cost, then smaller gamma (linear counts as
/// gamma zero). Points of different kinds are not comparable.
bool less_complex(const HyperParams& a, const HyperParams& b);

struct C50Model {
  std::vector<DecisionTree> trees;
  /// Vote weight per boosting trial.
  std::vector<double> alphas;
  std::size_t n_features = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;
};

/// An immutable trained model.
class Classifier {
 public:
  using Model = std::variant<C50Model, ForestModel, SvmModel>;

  explicit Classifier(Model model) : model_(std::move(model)) {}

  ModelKind kind() const;
  const Model& model() const { return model_; }

  /// Ties in any vote go to MCI_AD. Throws PredictionError for non-finite
  /// input or a wrong width.
  CognitiveLabel predict(std::span<const double> x) const;

  /// Debug dump; not a stable format.
  std::string to_json() const;

 private:
  Model model_;
};

/// AdaBoost.M1 over pruned gain-ratio trees. Boosting stops early when a
/// trial's weighted error is zero or at least one half.
Classifier train_c50(const Dataset& train, const C50Params& hp);

/// Bootstrap samples, per-node feature subsampling, unpruned trees.
Classifier train_rf(const Dataset& train, const RfParams& hp, std::uint64_t seed);

Classifier train_svm(const Dataset& train, const SvmParams& hp);

Classifier train(const Dataset& train, const HyperParams& hp, std::uint64_t seed);

/// Attribute usage per feature averaged over boosting trials, scaled to sum
/// to 100 (all zeros when no trial splits). Throws UsageError for other kinds.
std::vector<double> c50_importance(const Classifier& model);

struct TuneResult {
  HyperParams selected;
  /// Mean fold accuracy per grid point, in the order given.
  std::vector<double> mean_accuracy;
};

/// Stratified fold index per row, in [0, k).
std::vector<int> stratified_folds(std::span<const CognitiveLabel> labels, int k,
                                  std::uint64_t seed);

/// Highest score wins; ties (within 1e-12) go to the least complex point.
std::size_t select_best(std::span<const HyperParams> grid, std::span<const double> scores);

/// k-fold cross-validated grid search. Throws FoldError when size() < k.
TuneResult cv_tune(const Dataset& train, std::span<const HyperParams> grid, int k,
                   std::uint64_t seed);

struct Grids {
  std::vector<int> c50_trials{1, 5, 10, 20};
  int rf_trees = 500;
  std::vector<int> rf_mtry{2, 3, 4, 6};
  std::vector<Kernel> svm_kernels{Kernel::linear, Kernel::rbf};
  std::vector<double> svm_cost{0.1, 1, 10, 100};
  std::vector<double> svm_gamma{1.0 / 48, 1.0 / 12, 1.0 / 3};

  std::vector<HyperParams> for_model(ModelKind kind) const;
};

}  // namespace tripscope::learn
