// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tripscope/learn.hpp"

namespace tripscope::resample {

class SplitError : public Error {
 public:
  using Error::Error;
};

class SummaryError : public Error {
 public:
  using Error::Error;
};

/// One random train/test partition of the cohort. Indices are sorted.
struct SplitPlan {
  int split_id = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  /// Seed for everything fitted on this split: base seed XOR split_id.
  std::uint64_t seed = 0;
};

struct SplitPlanSet {
  std::vector<SplitPlan> plans;
  /// Draws discarded because the training side lacked a class.
  std::size_t rejections = 0;
};

inline constexpr int kRetryCap = 1000;

/// Simple random (not stratified) splits with round(train_frac * n) training
/// rows. Draws whose training side lacks a class are redrawn; more than
/// kRetryCap consecutive rejections throws SplitError.
SplitPlanSet make_splits(std::span<const CognitiveLabel> labels, int count,
                         double train_frac, std::uint64_t seed);

/// Confusion counts with MCI_AD as the positive class.
struct Confusion {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;

  int total() const { return tp + fp + fn + tn; }
  double accuracy() const { return total() ? double(tp + tn) / total() : 0.0; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion(std::span<const CognitiveLabel> truth,
                    std::span<const CognitiveLabel> predicted);

/// Empty optionals mark zero denominators.
struct Prf {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Prf prf(const Confusion& c);

struct MetricSummary {
  std::string metric;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double sd = 0;
  std::size_t n = 0;
  /// Values excluded because they were undefined.
  std::size_t undefined = 0;

  double iqr() const { return q3 - q1; }
};

/// Linear interpolation between order statistics at (n - 1) * p of the
/// sorted sample.
double quantile(std::span<const double> sorted, double p);

/// Quartiles and n-1 standard deviation (0 for a single value). Throws
/// SummaryError on empty input.
MetricSummary summarize(std::span<const double> values, std::string metric = {});

/// Summarizes the defined entries and counts the rest.
MetricSummary summarize(std::span<const std::optional<double>> values, std::string metric);

struct ModelOutcome {
  learn::ModelKind model = learn::ModelKind::c50;
  bool ok = false;
  std::string error;
  learn::HyperParams selected;
  Confusion confusion;
  double accuracy = 0;
  /// Aligned with SplitPlan::test.
  std::vector<CognitiveLabel> predictions;
  /// c50 only.
  std::vector<double> importance;
};

struct SplitResult {
  int split_id = 0;
  std::vector<ModelOutcome> outcomes;

  const ModelOutcome* find(learn::ModelKind kind) const;
};

struct ProtocolConfig {
  std::vector<learn::ModelKind> models{learn::ModelKind::c50, learn::ModelKind::rf,
                                       learn::ModelKind::svm};
  learn::Grids grids;
  int cv_folds = 10;
  /// 0 picks the hardware concurrency.
  int threads = 0;
};

/// Tunes, fits, and scores every configured model on every split. Tuning and
/// standardization only see the training rows. Results come back in plan
/// order regardless of thread count.
std::vector<SplitResult> run_protocol(const learn::Dataset& data,
                                      std::span<const SplitPlan> plans,
                                      const ProtocolConfig& config);

struct DriverMisclass {
  std::string driver_id;
  int n_test = 0;
  int n_miss = 0;
  /// 100 * n_miss / n_test; empty when the driver was never tested.
  std::optional<double> pct;
};

std::vector<DriverMisclass> driver_misclass(std::span<const SplitResult> results,
                                            std::span<const SplitPlan> plans,
                                            const learn::Dataset& data,
                                            std::span<const std::string> driver_ids,
                                            learn::ModelKind model);

struct ImportanceEntry {
  std::string feature;
  double importance = 0;
};

/// Mean c50 importance per feature across splits, sorted descending with
/// ties broken by feature name.
std::vector<ImportanceEntry> aggregate_importance(std::span<const SplitResult> results,
                                                  std::span<const std::string> feature_names);

struct ModelReport {
  learn::ModelKind model = learn::ModelKind::c50;
  std::size_t failed = 0;
  MetricSummary accuracy;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f1;
};

ModelReport report_model(std::span<const SplitResult> results, learn::ModelKind model);

/// Highest median accuracy, then smallest interquartile range, then the
/// order c50, rf, svm.
learn::ModelKind select_best_model(std::span<const ModelReport> reports);

/// metrics.csv: split_id, model, accuracy, tp, fp, fn, tn.
void write_metrics(std::ostream& out, std::span<const SplitResult> results);

}  // namespace tripscope::resample
