// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "tripscope/learn.hpp"

using namespace tripscope;
using namespace tripscope::learn;

namespace {

constexpr auto MCI = CognitiveLabel::mci_ad;
constexpr auto CU = CognitiveLabel::cu;

std::vector<std::string> names(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < p; ++f) out.push_back("f" + std::to_string(f));
  return out;
}

// Twelve features; the first two carry the class signal.
Dataset signal_data(std::uint64_t seed, std::size_t n, double shift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0, 1);
  Dataset d(names(12));
  for (std::size_t i = 0; i < n; ++i) {
    const bool mci = i % 2 == 0;
    std::vector<double> x(12);
    for (auto& v : x) v = z(rng);
    if (mci) {
      x[0] += shift;
      x[1] -= shift;
    }
    d.add(x, mci ? MCI : CU);
  }
  return d;
}

double accuracy(const Classifier& m, const Dataset& d) {
  int ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += m.predict(d.row(i)) == d.label(i);
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

Dataset one_d_separable() {
  Dataset d(names(1));
  for (int i = 1; i <= 10; ++i) {
    const double x = i;
    const double nx = -x;
    d.add(std::span<const double>(&x, 1), MCI);
    d.add(std::span<const double>(&nx, 1), CU);
  }
  return d;
}

Dataset xor_data(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Dataset d(names(2));
  for (std::size_t i = 0; i < n; ++i) {
    const double x[2] = {u(rng), u(rng)};
    const bool a = x[0] > 0.4, b = x[1] > 0.6;
    const bool flip = u(rng) < 0.1;
    d.add(x, (a != b) != flip ? MCI : CU);
  }
  return d;
}

}  // namespace

TEST_CASE("c50 on separable data") {
  const auto d = one_d_separable();
  const auto m = train_c50(d, C50Params{.trials = 1});
  CHECK(accuracy(m, d) == 1.0);
  const auto& model = std::get<C50Model>(m.model());
  REQUIRE(model.trees.size() == 1);
  CHECK(model.trees[0].leaf_count() == 2);
  const auto imp = c50_importance(m);
  CHECK(imp[0] == doctest::Approx(100.0));
}

TEST_CASE("c50 on noise stays within the min-cases bound") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 1);
  Dataset d(names(3));
  for (int i = 0; i < 80; ++i) {
    const double x[3] = {z(rng), z(rng), z(rng)};
    d.add(x, rng() % 2 ? MCI : CU);
  }
  const auto m = train_c50(d, C50Params{.trials = 1});
  CHECK(accuracy(m, d) <= 1.0);
  for (const auto& tree : std::get<C50Model>(m.model()).trees) {
    for (const auto& n : tree.nodes()) CHECK(n.weight() >= 2 - 1e-9);
    CHECK(tree.leaf_count() <= 40);
  }
}

TEST_CASE("boosting improves training accuracy on XOR-style data") {
  const auto d = xor_data(4, 200);
  const double one = accuracy(train_c50(d, C50Params{.trials = 1}), d);
  const double ten = accuracy(train_c50(d, C50Params{.trials = 10}), d);
  MESSAGE("1 trial " << one << ", 10 trials " << ten);
  CHECK(ten > one);
}

TEST_CASE("c50 errors and importance") {
  Dataset single(names(2));
  const double x[2] = {1, 2};
  single.add(x, CU);
  single.add(x, CU);
  CHECK_THROWS_AS(train_c50(single, C50Params{}), TrainingError);
  CHECK_THROWS_AS(train_rf(single, RfParams{}, 1), TrainingError);
  CHECK_THROWS_AS(train_svm(single, SvmParams{}), TrainingError);

  const auto d = signal_data(3, 120, 1.5);
  const auto m = train_c50(d, C50Params{.trials = 10});
  const auto imp = c50_importance(m);
  REQUIRE(imp.size() == 12);
  CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(100.0).epsilon(1e-12));
  for (double v : imp) CHECK(v >= 0);
  CHECK_THROWS_AS(c50_importance(train_rf(d, RfParams{.trees = 5}, 1)), UsageError);

  // A stump has no splits and no importance.
  Dataset flat(names(2));
  for (int i = 0; i < 6; ++i) {
    const double v[2] = {1, 1};
    flat.add(v, i < 4 ? CU : MCI);
  }
  const auto stump = train_c50(flat, C50Params{});
  for (double v : c50_importance(stump)) CHECK(v == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(stump.predict(flat.row(0)) == CU);
}

TEST_CASE("prediction input checks") {
  const auto d = signal_data(5, 40, 2.0);
  const auto m = train_c50(d, C50Params{});
  std::vector<double> x(12, 0.0);
  x[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.predict(x), PredictionError);
  x[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(m.predict(x), PredictionError);
  CHECK_THROWS_AS(m.predict(std::vector<double>(11, 0.0)), PredictionError);
  CHECK_FALSE(m.to_json().empty());
}

TEST_CASE("random forest") {
  const auto d = signal_data(6, 60, 4.0);
  SUBCASE("separable data is fit exactly") {
    const auto m = train_rf(d, RfParams{.trees = 500, .mtry = 3}, 11);
    CHECK(accuracy(m, d) == 1.0);
  }
  SUBCASE("one tree with every feature and no bootstrap is a plain tree") {
    const auto noisy = signal_data(7, 80, 0.7);
    const auto m = train_rf(noisy, RfParams{.trees = 1, .mtry = 12, .bootstrap = false}, 3);
    const auto tree = DecisionTree::grow(
        noisy, TreeOptions{.min_cases = 1, .prune = false, .threshold_penalty = false});
    const auto probes = signal_data(8, 200, 0.7);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      CHECK(m.predict(probes.row(i)) == tree.predict(probes.row(i)));
    }
  }
  SUBCASE("same seed, same forest") {
    const auto noisy = signal_data(9, 80, 0.7);
    const auto a = train_rf(noisy, RfParams{.trees = 50, .mtry = 3}, 21);
    const auto b = train_rf(noisy, RfParams{.trees = 50, .mtry = 3}, 21);
    const auto probes = signal_data(10, 200, 0.7);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      CHECK(a.predict(probes.row(i)) == b.predict(probes.row(i)));
    }
  }
  SUBCASE("tree order does not matter") {
    const auto noisy = signal_data(12, 80, 0.7);
    const auto m = train_rf(noisy, RfParams{.trees = 31, .mtry = 4}, 5);
    ForestModel reversed = std::get<ForestModel>(m.model());
    std::reverse(reversed.trees.begin(), reversed.trees.end());
    const Classifier r(reversed);
    const auto probes = signal_data(13, 200, 0.7);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      CHECK(m.predict(probes.row(i)) == r.predict(probes.row(i)));
    }
  }
}

TEST_CASE("forest votes and ties") {
  Dataset all_mci(names(1)), all_cu(names(1));
  const double x = 0;
  all_mci.add(std::span<const double>(&x, 1), MCI);
  all_cu.add(std::span<const double>(&x, 1), CU);
  const auto m = DecisionTree::grow(all_mci, TreeOptions{});
  const auto c = DecisionTree::grow(all_cu, TreeOptions{});
  const std::vector<double> probe{0.0};
  CHECK(Classifier(ForestModel{{m, c, m}, 1}).predict(probe) == MCI);
  CHECK(Classifier(ForestModel{{c, c, m}, 1}).predict(probe) == CU);
  CHECK(Classifier(ForestModel{{m, c}, 1}).predict(probe) == MCI);
  CHECK(Classifier(C50Model{{m, c}, {1.0, 1.0}, 1}).predict(probe) == MCI);
  CHECK(Classifier(C50Model{{m, c}, {1.0, 2.0}, 1}).predict(probe) == CU);
}

TEST_CASE("scaling a feature leaves tree models unchanged") {
  const auto d = signal_data(14, 100, 1.0);
  Dataset scaled(names(12));
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<double> x(d.row(i).begin(), d.row(i).end());
    x[0] *= 4.0;
    x[1] *= 0.5;
    scaled.add(x, d.label(i));
  }
  const auto c1 = train_c50(d, C50Params{.trials = 5});
  const auto c2 = train_c50(scaled, C50Params{.trials = 5});
  const auto r1 = train_rf(d, RfParams{.trees = 25, .mtry = 3}, 2);
  const auto r2 = train_rf(scaled, RfParams{.trees = 25, .mtry = 3}, 2);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    CHECK(c1.predict(d.row(i)) == c2.predict(scaled.row(i)));
    CHECK(r1.predict(d.row(i)) == r2.predict(scaled.row(i)));
  }
}

TEST_CASE("two-point linear SVM has its boundary at the midpoint") {
  Dataset d(names(12));
  std::vector<double> a(12, 0.0), b(12, 0.0);
  a[0] = -1;
  b[0] = 1;
  d.add(a, CU);
  d.add(b, MCI);
  const auto m = train_svm(d, SvmParams{.kernel = Kernel::linear, .cost = 100});
  const auto& svm = std::get<SvmModel>(m.model());
  std::vector<double> probe(12, 0.0);
  CHECK(std::abs(svm.decision_value(probe)) < 1e-9);
  CHECK(svm.predict(probe) == MCI);
  probe[0] = 0.5;
  CHECK(m.predict(probe) == MCI);
  CHECK(svm.decision_value(probe) > 0);
  probe[0] = -0.5;
  CHECK(m.predict(probe) == CU);
  // Margin 1 at the two training points.
  CHECK(svm.decision_value(b) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(svm.decision_value(a) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("identical rows with both labels are rejected") {
  Dataset d(names(12));
  const std::vector<double> x(12, 3.0);
  d.add(x, CU);
  d.add(x, MCI);
  d.add(x, MCI);
  CHECK_THROWS_AS(train_svm(d, SvmParams{}), TrainingError);
}

TEST_CASE("SVM fits separable data at large cost") {
  const auto d = signal_data(15, 60, 4.0);
  for (auto k : {Kernel::linear, Kernel::rbf}) {
    const auto m = train_svm(d, SvmParams{.kernel = k, .cost = 100});
    CHECK(accuracy(m, d) == 1.0);
  }
}

TEST_CASE("SMO satisfies the optimality conditions") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> z(0, 1);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 10 + rng() % 60;
    const std::size_t p = 3;
    std::vector<std::vector<double>> x(n, std::vector<double>(p));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2 ? 1 : -1;
      for (auto& v : x[i]) v = z(rng) + 0.5 * y[i];
    }
    const double gamma = 0.5;
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (std::size_t f = 0; f < p; ++f) d2 += (x[i][f] - x[j][f]) * (x[i][f] - x[j][f]);
        k[i * n + j] = rep % 2 ? std::exp(-gamma * d2) : std::inner_product(
            x[i].begin(), x[i].end(), x[j].begin(), 0.0);
      }
    }
    const double cost = rep % 3 == 0 ? 0.5 : 10.0;
    const double tol = 1e-3;
    const auto r = solve_smo(k, y, cost, tol, 1'000'000, true);

    double balance = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.alpha[i] >= 0);
      CHECK(r.alpha[i] <= cost);
      balance += y[i] * r.alpha[i];
    }
    CHECK(std::abs(balance) < 1e-9);

    // Gradient from scratch, then the maximal violating pair.
    double up = -1e300, low = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      double g = -1;
      for (std::size_t j = 0; j < n; ++j) g += y[i] * y[j] * k[i * n + j] * r.alpha[j];
      const bool at_upper = r.alpha[i] >= cost, at_lower = r.alpha[i] <= 0;
      const bool in_up = y[i] > 0 ? !at_upper : !at_lower;
      const bool in_low = y[i] > 0 ? !at_lower : !at_upper;
      if (in_up) up = std::max(up, -y[i] * g);
      if (in_low) low = std::max(low, y[i] * g);
    }
    CHECK(up + low < tol + 1e-9);

    for (std::size_t t = 1; t < r.objective_trace.size(); ++t) {
      CHECK(r.objective_trace[t] >= r.objective_trace[t - 1] - 1e-12);
    }
  }
}

TEST_CASE("SMO reports its iteration cap") {
  const std::vector<double> k{1, 0.5, 0.5, 1};
  const std::vector<int> y{1, -1};
  CHECK_THROWS_WITH_AS(solve_smo(k, y, 1.0, 1e-12, 0), doctest::Contains("0"), TrainingError);
}

TEST_CASE("complexity ordering and tie-break") {
  const std::vector<HyperParams> trials{C50Params{.trials = 1}, C50Params{.trials = 20}};
  const std::vector<double> tie{0.8, 0.8};
  CHECK(select_best(trials, tie) == 0);
  const std::vector<HyperParams> reversed{C50Params{.trials = 20}, C50Params{.trials = 1}};
  CHECK(select_best(reversed, tie) == 1);
  const std::vector<double> clear{0.9, 0.7};
  CHECK(select_best(reversed, clear) == 0);

  const std::vector<HyperParams> svms{
      SvmParams{.kernel = Kernel::rbf, .cost = 1, .gamma = 1.0 / 12},
      SvmParams{.kernel = Kernel::rbf, .cost = 0.1, .gamma = 1.0 / 3},
      SvmParams{.kernel = Kernel::linear, .cost = 1}};
  const std::vector<double> three{0.7, 0.7, 0.7};
  CHECK(select_best(svms, three) == 1);
  CHECK(less_complex(svms[2], svms[0]));
  CHECK(less_complex(RfParams{.trees = 500, .mtry = 2}, RfParams{.trees = 500, .mtry = 6}));
}

TEST_CASE("stratified folds") {
  std::vector<CognitiveLabel> y;
  for (int i = 0; i < 47; ++i) y.push_back(i < 20 ? MCI : CU);
  const auto folds = stratified_folds(y, 10, 3);
  REQUIRE(folds.size() == y.size());
  std::array<std::array<int, 2>, 10> counts{};
  for (std::size_t i = 0; i < y.size(); ++i) {
    REQUIRE(folds[i] >= 0);
    REQUIRE(folds[i] < 10);
    counts[static_cast<std::size_t>(folds[i])][static_cast<int>(y[i])]++;
  }
  for (int c = 0; c < 2; ++c) {
    int lo = 1000, hi = 0;
    for (const auto& f : counts) {
      lo = std::min(lo, f[static_cast<std::size_t>(c)]);
      hi = std::max(hi, f[static_cast<std::size_t>(c)]);
    }
    CHECK(hi - lo <= 1);
  }
  CHECK(stratified_folds(y, 10, 3) == folds);
}

TEST_CASE("cross-validated tuning") {
  const auto d = signal_data(17, 60, 5.0);
  SUBCASE("single point") {
    const std::vector<HyperParams> grid{C50Params{.trials = 5}};
    const auto r = cv_tune(d, grid, 10, 1);
    CHECK(std::get<C50Params>(r.selected).trials == 5);
    REQUIRE(r.mean_accuracy.size() == 1);
  }
  SUBCASE("exact tie goes to fewer trials") {
    const std::vector<HyperParams> grid{C50Params{.trials = 20}, C50Params{.trials = 1}};
    const auto r = cv_tune(d, grid, 10, 1);
    CHECK(r.mean_accuracy[0] == r.mean_accuracy[1]);
    CHECK(std::get<C50Params>(r.selected).trials == 1);
  }
  SUBCASE("too few rows") {
    const auto small = signal_data(18, 8, 1.0);
    const std::vector<HyperParams> grid{C50Params{}};
    CHECK_THROWS_AS(cv_tune(small, grid, 10, 1), FoldError);
  }
  SUBCASE("grids") {
    const Grids g;
    CHECK(g.for_model(ModelKind::c50).size() == 4);
    CHECK(g.for_model(ModelKind::rf).size() == 4);
    CHECK(g.for_model(ModelKind::svm).size() == 16);
  }
}
