// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tripscope/tree.hpp"

using namespace tripscope;
using namespace tripscope::learn;

namespace {

constexpr auto MCI = CognitiveLabel::mci_ad;
constexpr auto CU = CognitiveLabel::cu;

Dataset noisy_data(std::mt19937_64& rng, std::size_t n, std::size_t p, int levels) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < p; ++f) names.push_back("f" + std::to_string(f));
  Dataset d(names);
  std::uniform_int_distribution<int> level(0, levels - 1);
  std::normal_distribution<double> noise(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(p);
    for (auto& v : x) v = level(rng);
    const double score = x[0] - x[1 % p] + 0.8 * noise(rng);
    d.add(x, score > 0 ? MCI : CU);
  }
  return d;
}

// Straightforward recursive builder following the same split rules.
struct OracleNode {
  int feature = -1;
  double threshold = 0;
  std::unique_ptr<OracleNode> left, right;
  CognitiveLabel cls = MCI;
};

double h2(double a, double b) { return a + b > 0 ? oracle::entropy(a, b) : 0.0; }

std::unique_ptr<OracleNode> oracle_grow(const Dataset& d, const std::vector<double>& w,
                                        const std::vector<std::size_t>& rows, double min_cases,
                                        bool penalty) {
  auto node = std::make_unique<OracleNode>();
  double c0 = 0, c1 = 0;
  for (auto r : rows) (d.label(r) == CU ? c0 : c1) += w[r];
  node->cls = c0 > c1 ? CU : MCI;
  const double total = c0 + c1;
  if (c0 <= 0 || c1 <= 0 || total < 2 * min_cases) return node;
  const double parent = h2(c0, c1);

  struct Cand { int f; double t, gain, info; };
  std::vector<Cand> cands;
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    std::vector<double> values;
    for (auto r : rows) values.push_back(d.at(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    int cuts = 0;
    std::optional<Cand> best;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      double l0 = 0, l1 = 0;
      for (auto r : rows) {
        if (d.at(r, f) <= values[k]) (d.label(r) == CU ? l0 : l1) += w[r];
      }
      const double wl = l0 + l1, wr = total - wl;
      if (wl < min_cases || wr < min_cases) continue;
      ++cuts;
      const double gain = parent - wl / total * h2(l0, l1) - wr / total * h2(c0 - l0, c1 - l1);
      if (!best || gain > best->gain + 1e-12) best = Cand{int(f), values[k], gain, h2(wl, wr)};
    }
    if (!best) continue;
    if (penalty) best->gain -= std::log2(cuts) / total;
    if (best->gain > 1e-12 && best->info > 1e-12) cands.push_back(*best);
  }
  if (cands.empty()) return node;
  double avg = 0;
  for (const auto& c : cands) avg += c.gain;
  avg /= cands.size();
  const Cand* pick = nullptr;
  for (const auto& c : cands) {
    if (c.gain < avg - 1e-12) continue;
    if (!pick || c.gain / c.info > pick->gain / pick->info + 1e-12) pick = &c;
  }
  std::vector<std::size_t> lr, rr;
  for (auto r : rows) (d.at(r, pick->f) <= pick->t ? lr : rr).push_back(r);
  node->feature = pick->f;
  node->threshold = pick->t;
  node->left = oracle_grow(d, w, lr, min_cases, penalty);
  node->right = oracle_grow(d, w, rr, min_cases, penalty);
  return node;
}

CognitiveLabel oracle_predict(const OracleNode& n, std::span<const double> x) {
  if (n.feature < 0) return n.cls;
  return oracle_predict(x[n.feature] <= n.threshold ? *n.left : *n.right, x);
}

bool same_structure(const OracleNode& o, const std::vector<TreeNode>& nodes, int at) {
  const TreeNode& t = nodes[static_cast<std::size_t>(at)];
  if (o.feature != t.feature) return false;
  if (o.feature < 0) return o.cls == t.cls;
  return o.threshold == t.threshold && same_structure(*o.left, nodes, t.left) &&
         same_structure(*o.right, nodes, t.right);
}

}  // namespace

TEST_CASE("gain ratio hand example") {
  const std::vector<CognitiveLabel> y{MCI, MCI, CU, CU};
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(gain_ratio(y, x, 2.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gain_ratio(y, x, 0.5) == 0.0);
  CHECK(gain_ratio(y, x, 4.0) == 0.0);
  const std::vector<CognitiveLabel> pure{CU, CU, CU, CU};
  CHECK(gain_ratio(pure, x, 2.5) == 0.0);
  // One of four split off: gain 0.3113, split info 0.8113.
  CHECK(gain_ratio(y, x, 1.5) ==
        doctest::Approx((1 - 0.75 * oracle::entropy(1, 2)) / oracle::entropy(1, 3)).epsilon(1e-12));
}

TEST_CASE("gain ratio stays in [0, 1]") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + rng() % 30;
    std::vector<CognitiveLabel> y(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng() % 2 ? MCI : CU;
      x[i] = static_cast<double>(rng() % 10);
    }
    const double t = static_cast<double>(rng() % 10) + 0.5;
    const double g = gain_ratio(y, x, t);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 + 1e-12);
  }
}

TEST_CASE("pessimistic error bound") {
  CHECK(added_errors(6, 0, 0.25) == doctest::Approx(6 * (1 - std::pow(0.25, 1.0 / 6))));
  CHECK(added_errors(10, 2, 0.25) > 0);
  CHECK(added_errors(10, 2, 0.25) > added_errors(100, 20, 0.25) / 10);
  CHECK(added_errors(4, 4, 0.25) == doctest::Approx(0.0));
}

TEST_CASE("tree matches a brute-force builder") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 10 + rng() % 80;
    const Dataset d = noisy_data(rng, n, 4, 3 + static_cast<int>(rng() % 8));
    const bool fractional = rep % 2 == 1;
    std::vector<double> w(n, 1.0);
    if (fractional) {
      std::uniform_real_distribution<double> u(0.3, 2.0);
      for (auto& v : w) v = u(rng);
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    for (double min_cases : {1.0, 2.0}) {
      for (bool penalty : {true, false}) {
        const TreeOptions opt{.min_cases = min_cases, .prune = false, .threshold_penalty = penalty};
        const auto tree = DecisionTree::grow(d, rows, w, opt);
        const auto ref = oracle_grow(d, w, rows, min_cases, penalty);
        INFO("rep " << rep << " min_cases " << min_cases << " penalty " << penalty);
        CHECK(same_structure(*ref, tree.nodes(), 0));
        for (std::size_t i = 0; i < n; ++i) {
          CHECK(tree.predict(d.row(i)) == oracle_predict(*ref, d.row(i)));
        }
      }
    }
  }
}

TEST_CASE("repeated cases equal summed weights") {
  std::mt19937_64 rng(3);
  const Dataset d = noisy_data(rng, 60, 3, 6);
  std::vector<std::size_t> cases;
  std::vector<double> ones;
  std::vector<double> counts(60, 0.0);
  for (int i = 0; i < 60; ++i) {
    const auto r = rng() % 60;
    cases.push_back(r);
    ones.push_back(1.0);
    counts[r] += 1;
  }
  std::vector<std::size_t> rows;
  std::vector<double> weights;
  for (std::size_t r = 0; r < 60; ++r) {
    if (counts[r] > 0) {
      rows.push_back(r);
      weights.push_back(counts[r]);
    }
  }
  const TreeOptions opt{.min_cases = 1, .prune = false};
  const auto a = DecisionTree::grow(d, cases, ones, opt);
  const auto b = DecisionTree::grow(d, rows, weights, opt);
  REQUIRE(a.nodes().size() == b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].feature == b.nodes()[i].feature);
    CHECK(a.nodes()[i].threshold == b.nodes()[i].threshold);
  }
}

TEST_CASE("structural invariants") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    const Dataset d = noisy_data(rng, 20 + rng() % 100, 5, 10);
    for (bool prune : {false, true}) {
      const auto tree = DecisionTree::grow(d, TreeOptions{.min_cases = 2, .prune = prune});
      const auto& nodes = tree.nodes();
      CHECK(nodes[0].n_cases == static_cast<int>(d.size()));
      for (const auto& n : nodes) {
        if (n.is_leaf()) continue;
        CHECK(std::isfinite(n.threshold));
        const auto& l = nodes[static_cast<std::size_t>(n.left)];
        const auto& r = nodes[static_cast<std::size_t>(n.right)];
        CHECK(l.n_cases + r.n_cases == n.n_cases);
        CHECK(l.weight() >= 2);
        CHECK(r.weight() >= 2);
      }
      CHECK(tree.leaf_count() <= d.size() / 2);
    }
  }
}

TEST_CASE("pruning never raises the pessimistic estimate") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const Dataset d = noisy_data(rng, 20 + rng() % 150, 4, 12);
    const auto full = DecisionTree::grow(d, TreeOptions{.prune = false});
    const auto pruned = DecisionTree::grow(d, TreeOptions{.prune = true});
    CHECK(pruned.pessimistic_errors(0.25) <= full.pessimistic_errors(0.25) + 1e-9);
    CHECK(pruned.leaf_count() <= full.leaf_count());
  }
}

TEST_CASE("usage accumulates case shares") {
  // Root splits on f0; the four-case right side splits on f1.
  Dataset d({"f0", "f1"});
  const double rows[10][2] = {{0, 0}, {1, 5}, {2, 0}, {3, 5}, {4, 0}, {5, 5},
                              {6, 1}, {7, 4}, {8, 1}, {9, 4}};
  const CognitiveLabel ys[10] = {CU, CU, CU, CU, CU, CU, MCI, CU, MCI, CU};
  for (int copy = 0; copy < 5; ++copy) {
    for (int i = 0; i < 10; ++i) d.add(rows[i], ys[i]);
  }
  const auto tree = DecisionTree::grow(d, TreeOptions{.prune = false});
  REQUIRE(tree.nodes()[0].feature == 0);
  const auto u = tree.usage(2);
  CHECK(u[0] == doctest::Approx(100.0));
  CHECK(u[1] == doctest::Approx(40.0));
  CHECK(tree.depth() == 2);
}
