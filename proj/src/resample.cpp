// SPDX-License-Identifier: Apache-2.0

#include "tripscope/resample.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "tripscope/csv.hpp"

namespace tripscope::resample {

SplitPlanSet make_splits(std::span<const CognitiveLabel> labels, int count,
                         double train_frac, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 5) throw SplitError("need at least 5 samples to split, got " + std::to_string(n));
  if (!(train_frac > 0 && train_frac < 1)) throw SplitError("train fraction must be in (0, 1)");
  if (count < 1) throw SplitError("split count must be positive");
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  if (n_train < 2 || n_train >= n) {
    throw SplitError("train fraction leaves an empty side for n = " + std::to_string(n));
  }
  const bool has_mci = std::ranges::count(labels, CognitiveLabel::mci_ad) > 0;
  const bool has_cu = std::ranges::count(labels, CognitiveLabel::cu) > 0;
  if (!has_mci || !has_cu) throw SplitError("both classes must be present");

  SplitPlanSet out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  for (int id = 1; id <= count; ++id) {
    int rejected = 0;
    for (;;) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::array<bool, 2> seen{};
      for (std::size_t i = 0; i < n_train; ++i) seen[static_cast<int>(labels[perm[i]])] = true;
      if (seen[0] && seen[1]) break;
      ++out.rejections;
      if (++rejected > kRetryCap) {
        throw SplitError("split " + std::to_string(id) + ": training side lacked a class " +
                         "after " + std::to_string(kRetryCap) + " redraws");
      }
    }
    SplitPlan plan;
    plan.split_id = id;
    plan.seed = seed ^ static_cast<std::uint64_t>(id);
    plan.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    plan.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.test.begin(), plan.test.end());
    out.plans.push_back(std::move(plan));
  }
  return out;
}

Confusion confusion(std::span<const CognitiveLabel> truth,
                    std::span<const CognitiveLabel> predicted) {
  if (truth.size() != predicted.size()) throw SummaryError("confusion: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pos_truth = truth[i] == CognitiveLabel::mci_ad;
    const bool pos_pred = predicted[i] == CognitiveLabel::mci_ad;
    if (pos_truth && pos_pred) ++c.tp;
    else if (!pos_truth && pos_pred) ++c.fp;
    else if (pos_truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf prf(const Confusion& c) {
  Prf out;
  if (c.tp + c.fp > 0) out.precision = double(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = double(c.tp) / (c.tp + c.fn);
  if (out.precision && out.recall && *out.precision + *out.recall > 0) {
    out.f1 = 2 * *out.precision * *out.recall / (*out.precision + *out.recall);
  }
  return out;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw SummaryError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricSummary summarize(std::span<const double> values, std::string metric) {
  if (values.empty()) throw SummaryError("cannot summarize an empty sample: " + metric);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  MetricSummary s;
  s.metric = std::move(metric);
  s.n = sorted.size();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  if (s.n > 1 && sorted.front() != sorted.back()) {
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / s.n;
    double ss = 0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

MetricSummary summarize(std::span<const std::optional<double>> values, std::string metric) {
  std::vector<double> defined;
  std::size_t undefined = 0;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
    else ++undefined;
  }
  MetricSummary s;
  if (!defined.empty()) s = summarize(defined, metric);
  s.metric = std::move(metric);
  s.undefined = undefined;
  return s;
}

const ModelOutcome* SplitResult::find(learn::ModelKind kind) const {
  for (const auto& o : outcomes) {
    if (o.model == kind) return &o;
  }
  return nullptr;
}

namespace {

SplitResult run_split(const learn::Dataset& data, const SplitPlan& plan,
                      const ProtocolConfig& config) {
  SplitResult result;
  result.split_id = plan.split_id;
  const learn::Dataset train = data.subset(plan.train);
  const learn::Dataset test = data.subset(plan.test);
  for (learn::ModelKind kind : config.models) {
    ModelOutcome outcome;
    outcome.model = kind;
    try {
      const auto grid = config.grids.for_model(kind);
      if (grid.empty()) throw learn::UsageError("empty grid");
      outcome.selected = grid.size() == 1
                             ? grid.front()
                             : learn::cv_tune(train, grid, config.cv_folds, plan.seed).selected;
      const learn::Classifier model = learn::train(train, outcome.selected, plan.seed);
      for (std::size_t i = 0; i < test.size(); ++i) {
        outcome.predictions.push_back(model.predict(test.row(i)));
      }
      outcome.confusion = confusion(test.labels(), outcome.predictions);
      outcome.accuracy = outcome.confusion.accuracy();
      if (kind == learn::ModelKind::c50) outcome.importance = learn::c50_importance(model);
      outcome.ok = true;
    } catch (const Error& e) {
      outcome.ok = false;
      outcome.error = "split " + std::to_string(plan.split_id) + ": " + e.what();
      outcome.predictions.clear();
    }
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace

std::vector<SplitResult> run_protocol(const learn::Dataset& data,
                                      std::span<const SplitPlan> plans,
                                      const ProtocolConfig& config) {
  std::vector<SplitResult> results(plans.size());
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, plans.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      results[i] = run_split(data, plans[i], config);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return results;
}

std::vector<DriverMisclass> driver_misclass(std::span<const SplitResult> results,
                                            std::span<const SplitPlan> plans,
                                            const learn::Dataset& data,
                                            std::span<const std::string> driver_ids,
                                            learn::ModelKind model) {
  if (driver_ids.size() != data.size()) throw SummaryError("driver id count mismatch");
  std::map<int, const SplitPlan*> by_id;
  for (const auto& p : plans) by_id[p.split_id] = &p;
  std::vector<DriverMisclass> out(driver_ids.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].driver_id = driver_ids[i];
  for (const auto& r : results) {
    const ModelOutcome* o = r.find(model);
    if (!o || !o->ok) continue;
    const auto it = by_id.find(r.split_id);
    if (it == by_id.end()) throw SummaryError("result references unknown split");
    const SplitPlan& plan = *it->second;
    for (std::size_t t = 0; t < plan.test.size(); ++t) {
      const std::size_t row = plan.test[t];
      ++out[row].n_test;
      if (o->predictions[t] != data.label(row)) ++out[row].n_miss;
    }
  }
  for (auto& d : out) {
    if (d.n_test > 0) d.pct = 100.0 * d.n_miss / d.n_test;
  }
  return out;
}

std::vector<ImportanceEntry> aggregate_importance(std::span<const SplitResult> results,
                                                  std::span<const std::string> feature_names) {
  std::vector<double> sum(feature_names.size(), 0.0);
  std::size_t used = 0;
  for (const auto& r : results) {
    const ModelOutcome* o = r.find(learn::ModelKind::c50);
    if (!o || !o->ok || o->importance.size() != sum.size()) continue;
    for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += o->importance[f];
    ++used;
  }
  if (used == 0) throw SummaryError("no c50 importance vectors to aggregate");
  std::vector<ImportanceEntry> out;
  for (std::size_t f = 0; f < sum.size(); ++f) {
    out.push_back({feature_names[f], sum[f] / static_cast<double>(used)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.feature < b.feature;
  });
  return out;
}

ModelReport report_model(std::span<const SplitResult> results, learn::ModelKind model) {
  ModelReport report;
  report.model = model;
  std::vector<double> acc;
  std::vector<std::optional<double>> precision, recall, f1;
  for (const auto& r : results) {
    const ModelOutcome* o = r.find(model);
    if (!o) continue;
    if (!o->ok) {
      ++report.failed;
      continue;
    }
    acc.push_back(o->accuracy);
    const Prf m = prf(o->confusion);
    precision.push_back(m.precision);
    recall.push_back(m.recall);
    f1.push_back(m.f1);
  }
  const std::string name(learn::to_string(model));
  if (acc.empty()) throw SummaryError("model " + name + " has no successful splits");
  report.accuracy = summarize(acc, "accuracy");
  report.precision = summarize(precision, "precision");
  report.recall = summarize(recall, "recall");
  report.f1 = summarize(f1, "f1");
  return report;
}

learn::ModelKind select_best_model(std::span<const ModelReport> reports) {
  if (reports.empty()) throw SummaryError("no model reports");
  const ModelReport* best = &reports.front();
  for (const auto& r : reports) {
    const auto key = [](const ModelReport& m) {
      return std::make_tuple(-m.accuracy.median, m.accuracy.iqr(), static_cast<int>(m.model));
    };
    if (key(r) < key(*best)) best = &r;
  }
  return best->model;
}

void write_metrics(std::ostream& out, std::span<const SplitResult> results) {
  out << "split_id,model,accuracy,tp,fp,fn,tn\n";
  for (const auto& r : results) {
    for (const auto& o : r.outcomes) {
      if (!o.ok) continue;
      out << r.split_id << ',' << learn::to_string(o.model) << ','
          << csv::format_fixed(o.accuracy, 6) << ',' << o.confusion.tp << ','
          << o.confusion.fp << ',' << o.confusion.fn << ',' << o.confusion.tn << '\n';
    }
  }
}

}  // namespace tripscope::resample
