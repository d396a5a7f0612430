// SPDX-License-Identifier: Apache-2.0

#include "tripscope/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace tripscope::learn {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

nlohmann::json tree_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j{{"n_cases", n.n_cases},
                     {"class", to_string(n.cls)},
                     {"weight_cu", n.class_weight[0]},
                     {"weight_mci_ad", n.class_weight[1]}};
    if (!n.is_leaf()) {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return nodes;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<std::string> feature_names) : names_(std::move(feature_names)) {}

void Dataset::add(std::span<const double> x, CognitiveLabel y) {
  if (x.size() != n_features()) {
    throw TrainingError("dataset: expected " + std::to_string(n_features()) +
                        " features, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw TrainingError("dataset: non-finite feature value");
  }
  values_.insert(values_.end(), x.begin(), x.end());
  labels_.push_back(y);
}

std::array<std::size_t, 2> Dataset::class_counts() const {
  std::array<std::size_t, 2> counts{};
  for (auto y : labels_) ++counts[static_cast<int>(y)];
  return counts;
}

bool Dataset::has_both_classes() const {
  const auto c = class_counts();
  return c[0] > 0 && c[1] > 0;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(names_);
  out.values_.reserve(rows.size() * n_features());
  for (std::size_t r : rows) {
    const auto x = row(r);
    out.values_.insert(out.values_.end(), x.begin(), x.end());
    out.labels_.push_back(labels_[r]);
  }
  return out;
}

Dataset Dataset::relabeled(std::span<const CognitiveLabel> labels) const {
  if (labels.size() != size()) throw UsageError("dataset: label count mismatch");
  Dataset out = *this;
  out.labels_.assign(labels.begin(), labels.end());
  return out;
}

// ---------------------------------------------------------------------------
// Hyperparameters

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::c50: return "c50";
    case ModelKind::rf: return "rf";
    case ModelKind::svm: return "svm";
  }
  return "?";
}

ModelKind kind_of(const HyperParams& hp) { return static_cast<ModelKind>(hp.index()); }

std::string describe(const HyperParams& hp) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const C50Params& p) { out << "trials=" << p.trials; },
                 [&](const RfParams& p) { out << "trees=" << p.trees << " mtry=" << p.mtry; },
                 [&](const SvmParams& p) {
                   out << "kernel=" << (p.kernel == Kernel::linear ? "linear" : "rbf")
                       << " C=" << p.cost;
                   if (p.kernel == Kernel::rbf) out << " gamma=" << p.gamma;
                 },
             },
             hp);
  return out.str();
}

bool less_complex(const HyperParams& a, const HyperParams& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  if (const auto* pa = std::get_if<C50Params>(&a)) {
    return pa->trials < std::get<C50Params>(b).trials;
  }
  if (const auto* pa = std::get_if<RfParams>(&a)) {
    const auto& pb = std::get<RfParams>(b);
    return std::tie(pa->trees, pa->mtry) < std::tie(pb.trees, pb.mtry);
  }
  const auto& pa = std::get<SvmParams>(a);
  const auto& pb = std::get<SvmParams>(b);
  const double ga = pa.kernel == Kernel::linear ? 0.0 : pa.gamma;
  const double gb = pb.kernel == Kernel::linear ? 0.0 : pb.gamma;
  return std::tie(pa.cost, ga) < std::tie(pb.cost, gb);
}

std::vector<HyperParams> Grids::for_model(ModelKind kind) const {
  std::vector<HyperParams> grid;
  switch (kind) {
    case ModelKind::c50:
      for (int t : c50_trials) grid.emplace_back(C50Params{.trials = t});
      break;
    case ModelKind::rf:
      for (int m : rf_mtry) grid.emplace_back(RfParams{.trees = rf_trees, .mtry = m});
      break;
    case ModelKind::svm:
      for (Kernel k : svm_kernels) {
        for (double c : svm_cost) {
          if (k == Kernel::linear) {
            grid.emplace_back(SvmParams{.kernel = k, .cost = c});
            continue;
          }
          for (double g : svm_gamma) {
            grid.emplace_back(SvmParams{.kernel = k, .cost = c, .gamma = g});
          }
        }
      }
      break;
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Classifier

ModelKind Classifier::kind() const { return static_cast<ModelKind>(model_.index()); }

CognitiveLabel Classifier::predict(std::span<const double> x) const {
  for (double v : x) {
    if (!std::isfinite(v)) throw PredictionError("predict: non-finite feature value");
  }
  return std::visit(
      Overloaded{
          [&](const C50Model& m) {
            if (x.size() != m.n_features) throw PredictionError("predict: wrong width");
            double score = 0;
            for (std::size_t t = 0; t < m.trees.size(); ++t) {
              score += m.trees[t].predict(x) == CognitiveLabel::mci_ad ? m.alphas[t]
                                                                       : -m.alphas[t];
            }
            return score >= 0 ? CognitiveLabel::mci_ad : CognitiveLabel::cu;
          },
          [&](const ForestModel& m) {
            if (x.size() != m.n_features) throw PredictionError("predict: wrong width");
            long votes = 0;
            for (const auto& tree : m.trees) {
              votes += tree.predict(x) == CognitiveLabel::mci_ad ? 1 : -1;
            }
            return votes >= 0 ? CognitiveLabel::mci_ad : CognitiveLabel::cu;
          },
          [&](const SvmModel& m) {
            if (x.size() != m.mean().size()) throw PredictionError("predict: wrong width");
            return m.predict(x);
          },
      },
      model_);
}

std::string Classifier::to_json() const {
  nlohmann::json j;
  j["model"] = to_string(kind());
  std::visit(Overloaded{
                 [&](const C50Model& m) {
                   j["alphas"] = m.alphas;
                   for (const auto& t : m.trees) j["trees"].push_back(tree_json(t));
                 },
                 [&](const ForestModel& m) {
                   for (const auto& t : m.trees) j["trees"].push_back(tree_json(t));
                 },
                 [&](const SvmModel& m) {
                   j["kernel"] = m.params().kernel == Kernel::linear ? "linear" : "rbf";
                   j["cost"] = m.params().cost;
                   j["gamma"] = m.params().gamma;
                   j["bias"] = m.bias();
                   j["mean"] = m.mean();
                   j["scale"] = m.scale();
                   j["support_vectors"] = m.support_vectors();
                   j["coefficients"] = m.coefficients();
                 },
             },
             model_);
  return j.dump(1);
}

Classifier train_c50(const Dataset& train, const C50Params& hp) {
  if (!train.has_both_classes()) throw TrainingError("c50: training data has one class");
  if (hp.trials < 1) throw TrainingError("c50: trials must be >= 1");
  const std::size_t n = train.size();
  std::vector<std::size_t> cases(n);
  std::iota(cases.begin(), cases.end(), 0);
  std::vector<double> weights(n, 1.0);
  const TreeOptions options{.min_cases = hp.min_cases,
                            .prune = true,
                            .confidence = hp.confidence};
  C50Model model;
  model.n_features = train.n_features();
  std::vector<char> wrong(n);
  const FeatureOrder order = presort(train);
  for (int t = 0; t < hp.trials; ++t) {
    DecisionTree tree = DecisionTree::grow(train, cases, weights, options, nullptr, &order);
    double err = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = tree.predict(train.row(i)) != train.label(i);
      total += weights[i];
      if (wrong[i]) err += weights[i];
    }
    err /= total;
    if (t == 0 && (err <= 0 || err >= 0.5)) {
      model.trees.push_back(std::move(tree));
      model.alphas.push_back(1.0);
      break;
    }
    if (err >= 0.5) break;
    const double clipped = std::max(err, 1e-10);
    const double alpha = std::log((1 - clipped) / clipped);
    model.trees.push_back(std::move(tree));
    model.alphas.push_back(alpha);
    if (err <= 0) break;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (wrong[i]) weights[i] *= std::exp(alpha);
      sum += weights[i];
    }
    for (double& w : weights) w *= static_cast<double>(n) / sum;
  }
  return Classifier(std::move(model));
}

Classifier train_rf(const Dataset& train, const RfParams& hp, std::uint64_t seed) {
  if (!train.has_both_classes()) throw TrainingError("rf: training data has one class");
  if (hp.trees < 1) throw TrainingError("rf: trees must be >= 1");
  const std::size_t n = train.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> draw(0, n - 1);
  const TreeOptions options{
      .min_cases = 1, .prune = false, .mtry = hp.mtry, .threshold_penalty = false};
  ForestModel model;
  model.n_features = train.n_features();
  model.trees.reserve(static_cast<std::size_t>(hp.trees));
  std::vector<std::size_t> cases(n);
  const std::vector<double> weights(n, 1.0);
  const FeatureOrder order = presort(train);
  for (int t = 0; t < hp.trees; ++t) {
    if (hp.bootstrap) {
      for (auto& c : cases) c = draw(rng);
    } else {
      std::iota(cases.begin(), cases.end(), 0);
    }
    model.trees.push_back(DecisionTree::grow(train, cases, weights, options, &rng, &order));
  }
  return Classifier(std::move(model));
}

Classifier train_svm(const Dataset& train, const SvmParams& hp) {
  return Classifier(SvmModel(train, hp));
}

Classifier train(const Dataset& train, const HyperParams& hp, std::uint64_t seed) {
  return std::visit(Overloaded{
                        [&](const C50Params& p) { return train_c50(train, p); },
                        [&](const RfParams& p) { return train_rf(train, p, seed); },
                        [&](const SvmParams& p) { return train_svm(train, p); },
                    },
                    hp);
}

std::vector<double> c50_importance(const Classifier& model) {
  const auto* m = std::get_if<C50Model>(&model.model());
  if (!m) throw UsageError("importance is only defined for c50 models");
  std::vector<double> sum(m->n_features, 0.0);
  for (const auto& tree : m->trees) {
    const auto u = tree.usage(m->n_features);
    for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += u[f];
  }
  const double total = std::accumulate(sum.begin(), sum.end(), 0.0);
  if (total <= 0) return sum;
  for (double& v : sum) v *= 100.0 / total;
  return sum;
}

// ---------------------------------------------------------------------------
// Tuning

std::vector<int> stratified_folds(std::span<const CognitiveLabel> labels, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw FoldError("cv: need at least 2 folds");
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw FoldError("cv: " + std::to_string(labels.size()) + " rows cannot fill " +
                    std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size());
  int next = 0;
  for (auto cls : {CognitiveLabel::mci_ad, CognitiveLabel::cu}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold[i] = next++ % k;
  }
  return fold;
}

std::size_t select_best(std::span<const HyperParams> grid, std::span<const double> scores) {
  if (grid.empty() || grid.size() != scores.size()) {
    throw UsageError("select_best: grid and scores must be non-empty and aligned");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (scores[i] < top - 1e-12) continue;
    if (!best || less_complex(grid[i], grid[*best])) best = i;
  }
  return *best;
}

TuneResult cv_tune(const Dataset& train, std::span<const HyperParams> grid, int k,
                   std::uint64_t seed) {
  if (grid.empty()) throw UsageError("cv_tune: empty grid");
  const auto folds = stratified_folds(train.labels(), k, seed);
  std::vector<double> acc_sum(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < train.size(); ++i) (folds[i] == f ? te : tr).push_back(i);
    if (te.empty()) continue;
    const Dataset fold_train = train.subset(tr);
    const Dataset fold_test = train.subset(te);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::size_t correct = 0;
      if (!fold_train.has_both_classes()) {
        const auto only = fold_train.label(0);
        for (std::size_t i = 0; i < fold_test.size(); ++i) correct += fold_test.label(i) == only;
      } else {
        try {
          const Classifier model = learn::train(fold_train, grid[g], mix(seed, static_cast<std::uint64_t>(f)));
          for (std::size_t i = 0; i < fold_test.size(); ++i) {
            correct += model.predict(fold_test.row(i)) == fold_test.label(i);
          }
        } catch (const TrainingError&) {
          // A grid point that cannot be fitted on this fold scores zero.
        }
      }
      acc_sum[g] += static_cast<double>(correct) / static_cast<double>(fold_test.size());
    }
  }
  TuneResult result{grid.front(), {}};
  for (double s : acc_sum) result.mean_accuracy.push_back(s / k);
  result.selected = grid[select_best(grid, result.mean_accuracy)];
  return result;
}

}  // namespace tripscope::learn
