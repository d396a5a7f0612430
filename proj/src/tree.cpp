// SPDX-License-Identifier: Apache-2.0

#include "tripscope/tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>

namespace tripscope::learn {
namespace {

constexpr int kTableSize = 4096;

// x * log2(x), tabulated for the small whole-number weights that dominate.
const std::array<double, kTableSize> kXLogX = [] {
  std::array<double, kTableSize> t{};
  for (std::size_t i = 1; i < t.size(); ++i) t[i] = i * std::log2(static_cast<double>(i));
  return t;
}();

double xlogx(double x) {
  if (x <= 0) return 0;
  if (x < kTableSize) {
    const auto k = static_cast<std::size_t>(x);
    if (static_cast<double>(k) == x) return kXLogX[k];
  }
  return x * std::log2(x);
}

// Weighted entropy sum: total * H(a, b).
double split_info(double a, double b) { return xlogx(a + b) - xlogx(a) - xlogx(b); }

// Entropy in bits of a two-class weight distribution.
double entropy(double a, double b) {
  const double total = a + b;
  if (total <= 0) return 0;
  auto plogp = [](double p) { return p > 0 ? p * std::log2(p) : 0.0; };
  return -(plogp(a / total) + plogp(b / total));
}

CognitiveLabel majority(const std::array<double, 2>& w) {
  return w[0] > w[1] ? CognitiveLabel::cu : CognitiveLabel::mci_ad;
}

struct Candidate {
  int feature = -1;
  double threshold = 0;
  double gain = 0;
  double info = 0;
};

}  // namespace

double gain_ratio(std::span<const CognitiveLabel> labels, std::span<const double> x,
                  double threshold) {
  if (labels.size() != x.size()) {
    throw UsageError("gain_ratio: labels and values differ in length");
  }
  std::array<double, 2> left{}, right{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& side = x[i] <= threshold ? left : right;
    side[static_cast<int>(labels[i])] += 1;
  }
  const double nl = left[0] + left[1];
  const double nr = right[0] + right[1];
  const double n = nl + nr;
  if (nl == 0 || nr == 0) return 0;
  const double parent = entropy(left[0] + right[0], left[1] + right[1]);
  if (parent == 0) return 0;
  const double gain = parent - (nl / n) * entropy(left[0], left[1]) -
                      (nr / n) * entropy(right[0], right[1]);
  const double info = entropy(nl, nr);
  return std::max(0.0, gain / info);
}

double added_errors(double cases, double errors, double cf) {
  // Normal deviate for the one-sided confidence level, interpolated from a
  // coarse table the same way C4.5 does.
  static constexpr double kVal[] = {0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00};
  static constexpr double kDev[] = {4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00};
  int i = 0;
  while (cf > kVal[i]) ++i;
  double coeff = i == 0 ? kDev[0]
                        : kDev[i - 1] + (kDev[i] - kDev[i - 1]) * (cf - kVal[i - 1]) /
                                            (kVal[i] - kVal[i - 1]);
  coeff *= coeff;

  if (errors < 1e-6) return cases * (1 - std::exp(std::log(cf) / cases));
  if (errors < 0.9999) {
    const double v0 = cases * (1 - std::exp(std::log(cf) / cases));
    return v0 + errors * (added_errors(cases, 1.0, cf) - v0);
  }
  if (errors + 0.5 >= cases) return 0.67 * (cases - errors);
  const double pr =
      (errors + 0.5 + coeff / 2 +
       std::sqrt(coeff * ((errors + 0.5) * (1 - (errors + 0.5) / cases) + coeff / 4))) /
      (cases + coeff);
  return cases * pr - errors;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeOptions& options, std::mt19937_64* rng)
      : data_(data), options_(options), rng_(rng) {
    features_.resize(data.n_features());
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::span<const std::size_t> cases, std::span<const double> weights,
                     const FeatureOrder* order) {
    if (cases.size() != weights.size()) {
      throw UsageError("tree: cases and weights differ in length");
    }
    if (cases.empty()) throw TrainingError("tree: no training cases");
    FeatureOrder own;
    if (!order) {
      own = presort(data_);
      order = &own;
    }
    x_ = &order->columns;
    // Repeated rows collapse into one weighted case.
    const std::size_t n = data_.size();
    w_.assign(n, 0.0);
    y_.resize(n);
    std::vector<char> present(n, 0);
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (cases[i] >= n) throw UsageError("tree: case index out of range");
      w_[cases[i]] += weights[i];
      present[cases[i]] = 1;
    }
    for (std::size_t r = 0; r < n; ++r) y_[r] = static_cast<int>(data_.label(r));
    wi_.assign(n, 0);
    double sum = 0;
    integral_ = true;
    for (std::size_t r = 0; r < n; ++r) {
      sum += w_[r];
      wi_[r] = static_cast<int>(w_[r]);
      if (static_cast<double>(wi_[r]) != w_[r]) integral_ = false;
    }
    if (sum >= kTableSize) integral_ = false;
    sorted_.resize(data_.n_features());
    std::size_t m = 0;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      auto& s = sorted_[f];
      s.resize(n);
      std::size_t k = 0;
      for (auto r : order->order[f]) {
        s[k] = r;
        k += static_cast<std::size_t>(present[r]);
      }
      s.resize(k);
      m = k;
    }
    nodes_.reserve(2 * m);
    go_left_.assign(n, 0);
    left_buf_.resize(m + 1);
    right_buf_.resize(m + 1);
    grow(0, m);
    if (options_.prune) {
      prune(0);
      compact();
    }
    DecisionTree tree;
    tree.nodes_ = std::move(nodes_);
    return tree;
  }

 private:
  bool stops(const std::array<double, 2>& w) const {
    return w[0] <= 0 || w[1] <= 0 || w[0] + w[1] < 2 * options_.min_cases;
  }

  int grow(std::size_t begin, std::size_t end) {
    TreeNode node;
    for (std::size_t i = begin; i < end; ++i) {
      const auto c = sorted_[0][i];
      node.class_weight[y_[c]] += w_[c];
    }
    node.n_cases = static_cast<int>(end - begin);
    node.cls = majority(node.class_weight);
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    if (stops(node.class_weight)) return index;
    const auto best = choose_split(begin, end, node);
    if (!best) return index;

    const auto& xf = (*x_)[static_cast<std::size_t>(best->feature)];
    std::size_t n_left = 0;
    std::array<double, 2> lw{};
    for (std::size_t i = begin; i < end; ++i) {
      const auto c = sorted_[0][i];
      go_left_[c] = xf[c] <= best->threshold;
      n_left += go_left_[c];
      lw[y_[c]] += go_left_[c] ? w_[c] : 0.0;
    }
    const std::array<double, 2> rw{node.class_weight[0] - lw[0], node.class_weight[1] - lw[1]};
    const bool both_leaves = stops(lw) && stops(rw);
    // Leaves only read the first ordering.
    const std::size_t n_orders = both_leaves ? 1 : sorted_.size();
    for (std::size_t f = 0; f < n_orders; ++f) {
      auto& s = sorted_[f];
      std::size_t l = 0, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto c = s[i];
        const std::size_t g = go_left_[c];
        left_buf_[l] = c;
        right_buf_[r] = c;
        l += g;
        r += 1 - g;
      }
      std::copy_n(left_buf_.begin(), l, s.begin() + static_cast<std::ptrdiff_t>(begin));
      std::copy_n(right_buf_.begin(), r, s.begin() + static_cast<std::ptrdiff_t>(begin + l));
    }
    const std::size_t split = begin + n_left;
    const int left = grow(begin, split);
    const int right = grow(split, end);
    TreeNode& self = nodes_[static_cast<std::size_t>(index)];
    self.feature = best->feature;
    self.threshold = best->threshold;
    self.left = left;
    self.right = right;
    return index;
  }

  std::span<const int> candidate_features() {
    const int p = static_cast<int>(features_.size());
    if (options_.mtry <= 0 || options_.mtry >= p) {
      std::iota(features_.begin(), features_.end(), 0);
      return features_;
    }
    if (!rng_) throw UsageError("tree: feature subsampling needs a generator");
    std::iota(features_.begin(), features_.end(), 0);
    for (int i = 0; i < options_.mtry; ++i) {
      std::uniform_int_distribution<int> pick(i, p - 1);
      std::swap(features_[static_cast<std::size_t>(i)],
                features_[static_cast<std::size_t>(pick(*rng_))]);
    }
    std::sort(features_.begin(), features_.begin() + options_.mtry);
    return {features_.data(), static_cast<std::size_t>(options_.mtry)};
  }

  std::optional<Candidate> choose_split(std::size_t begin, std::size_t end,
                                        const TreeNode& node) {
    found_.clear();
    const double parent = entropy(node.class_weight[0], node.class_weight[1]);
    for (int f : candidate_features()) {
      if (auto c = best_threshold(begin, end, f, node, parent)) found_.push_back(*c);
    }
    if (found_.empty()) return std::nullopt;
    double avg_gain = 0;
    for (const auto& c : found_) avg_gain += c.gain;
    avg_gain /= static_cast<double>(found_.size());
    std::optional<Candidate> best;
    double best_ratio = -1;
    for (const auto& c : found_) {
      if (c.gain < avg_gain - 1e-12) continue;
      const double ratio = c.gain / c.info;
      if (ratio > best_ratio + 1e-12) {
        best_ratio = ratio;
        best = c;
      }
    }
    return best;
  }

  // Highest-gain admissible cut on one feature.
  std::optional<Candidate> best_threshold(std::size_t begin, std::size_t end, int feature,
                                          const TreeNode& node, double parent) {
    if (integral_) return best_threshold_counts(begin, end, feature, node, parent);
    const auto& s = sorted_[static_cast<std::size_t>(feature)];
    const auto& xf = (*x_)[static_cast<std::size_t>(feature)];
    const double total = node.weight();
    std::array<double, 2> left{};
    Candidate best;
    best.feature = feature;
    best.gain = -1;
    int cuts = 0;
    double best_left = 0;
    for (std::size_t i = begin; i + 1 < end; ++i) {
      const auto c = s[i];
      left[y_[c]] += w_[c];
      if (xf[c] == xf[s[i + 1]]) continue;
      const double wl = left[0] + left[1];
      const double wr = total - wl;
      if (wl < options_.min_cases || wr < options_.min_cases) continue;
      ++cuts;
      const double gain =
          parent - (split_info(left[0], left[1]) +
                    split_info(node.class_weight[0] - left[0], node.class_weight[1] - left[1])) /
                       total;
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.threshold = xf[c];
        best_left = wl;
      }
    }
    if (cuts == 0) return std::nullopt;
    if (options_.threshold_penalty) best.gain -= std::log2(cuts) / total;
    best.info = entropy(best_left, total - best_left);
    if (best.gain <= 1e-12 || best.info <= 1e-12) return std::nullopt;
    return best;
  }

  // Same search with whole-number weights, reading x log x from the table.
  std::optional<Candidate> best_threshold_counts(std::size_t begin, std::size_t end,
                                                 int feature, const TreeNode& node,
                                                 double parent) {
    const auto& s = sorted_[static_cast<std::size_t>(feature)];
    const auto& xf = (*x_)[static_cast<std::size_t>(feature)];
    const int c0 = static_cast<int>(node.class_weight[0]);
    const int c1 = static_cast<int>(node.class_weight[1]);
    const int total = c0 + c1;
    const double min_cases = options_.min_cases;
    int l0 = 0, l1 = 0;
    Candidate best;
    best.feature = feature;
    best.gain = -1;
    int cuts = 0;
    int best_left = 0;
    double best_info_sum = 0;
    bool have = false;
    for (std::size_t i = begin; i + 1 < end; ++i) {
      const auto c = s[i];
      (y_[c] ? l1 : l0) += wi_[c];
      const double x = xf[c];
      if (x == xf[s[i + 1]]) continue;
      const int wl = l0 + l1;
      const int wr = total - wl;
      if (wl < min_cases || wr < min_cases) continue;
      ++cuts;
      const int r0 = c0 - l0, r1 = c1 - l1;
      const double info_sum = (kXLogX[wl] - kXLogX[l0] - kXLogX[l1]) +
                              (kXLogX[wr] - kXLogX[r0] - kXLogX[r1]);
      if (!have || info_sum < best_info_sum - 1e-12) {
        have = true;
        best_info_sum = info_sum;
        best.threshold = x;
        best_left = wl;
      }
    }
    if (cuts == 0) return std::nullopt;
    best.gain = parent - best_info_sum / total;
    if (options_.threshold_penalty) best.gain -= kXLogX[cuts] / cuts / total;
    best.info = entropy(best_left, total - best_left);
    if (best.gain <= 1e-12 || best.info <= 1e-12) return std::nullopt;
    return best;
  }

  double leaf_estimate(const TreeNode& node) const {
    const double n = node.weight();
    const double e = n - node.class_weight[static_cast<int>(node.cls)];
    return e + added_errors(n, e, options_.confidence);
  }

  // Subtree replacement, bottom-up. Returns the estimate of the result.
  double prune(int index) {
    TreeNode& node = nodes_[static_cast<std::size_t>(index)];
    const double as_leaf = leaf_estimate(node);
    if (node.is_leaf()) return as_leaf;
    const int left = node.left, right = node.right;
    const double subtree = prune(left) + prune(right);
    TreeNode& again = nodes_[static_cast<std::size_t>(index)];
    if (as_leaf <= subtree) {
      again.feature = -1;
      again.left = again.right = -1;
      again.threshold = 0;
      return as_leaf;
    }
    return subtree;
  }

  // Drops nodes orphaned by pruning, keeping preorder numbering.
  void compact() {
    std::vector<TreeNode> out;
    out.reserve(nodes_.size());
    auto copy = [&](auto&& self, int index) -> int {
      const int at = static_cast<int>(out.size());
      out.push_back(nodes_[static_cast<std::size_t>(index)]);
      if (!out.back().is_leaf()) {
        const int l = self(self, out.back().left);
        const int r = self(self, out[static_cast<std::size_t>(at)].right);
        out[static_cast<std::size_t>(at)].left = l;
        out[static_cast<std::size_t>(at)].right = r;
      }
      return at;
    };
    copy(copy, 0);
    nodes_ = std::move(out);
  }

  const Dataset& data_;
  TreeOptions options_;
  std::mt19937_64* rng_;
  const std::vector<std::vector<double>>* x_ = nullptr;
  std::vector<int> y_;
  std::vector<double> w_;
  std::vector<int> wi_;
  bool integral_ = false;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<char> go_left_;
  std::vector<std::uint32_t> left_buf_;
  std::vector<std::uint32_t> right_buf_;
  std::vector<Candidate> found_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

DecisionTree DecisionTree::grow(const Dataset& data, std::span<const std::size_t> cases,
                                std::span<const double> weights,
                                const TreeOptions& options, std::mt19937_64* rng,
                                const FeatureOrder* order) {
  TreeBuilder builder(data, options, rng);
  return builder.build(cases, weights, order);
}

FeatureOrder presort(const Dataset& data) {
  FeatureOrder out;
  out.columns.assign(data.n_features(), std::vector<double>(data.size()));
  out.order.resize(data.n_features());
  for (std::size_t f = 0; f < data.n_features(); ++f) {
    auto& col = out.columns[f];
    for (std::size_t r = 0; r < data.size(); ++r) col[r] = data.at(r, f);
    auto& o = out.order[f];
    o.resize(data.size());
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return out;
}

DecisionTree DecisionTree::grow(const Dataset& data, const TreeOptions& options) {
  std::vector<std::size_t> cases(data.size());
  std::iota(cases.begin(), cases.end(), 0);
  const std::vector<double> weights(data.size(), 1.0);
  return grow(data, cases, weights, options, nullptr);
}

CognitiveLabel DecisionTree::predict(std::span<const double> x) const {
  int at = 0;
  while (!nodes_[static_cast<std::size_t>(at)].is_leaf()) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(at)];
    at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(at)].cls;
}

int DecisionTree::depth() const {
  auto walk = [&](auto&& self, int index) -> int {
    const TreeNode& n = nodes_[static_cast<std::size_t>(index)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(self(self, n.left), self(self, n.right));
  };
  return walk(walk, 0);
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double DecisionTree::pessimistic_errors(double cf) const {
  double sum = 0;
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) continue;
    const double e = n.weight() - n.class_weight[static_cast<int>(n.cls)];
    sum += e + added_errors(n.weight(), e, cf);
  }
  return sum;
}

std::vector<double> DecisionTree::usage(std::size_t n_features) const {
  std::vector<double> out(n_features, 0.0);
  const double root = nodes_.front().n_cases;
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    out[static_cast<std::size_t>(n.feature)] += 100.0 * n.n_cases / root;
  }
  return out;
}

}  // namespace tripscope::learn
