// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "tripscope/ingest.hpp"
#include "tripscope/learn.hpp"
#include "tripscope/lifespace.hpp"
#include "tripscope/resample.hpp"
#include "tripscope/synthcohort.hpp"

namespace tripscope::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitData = 3;

/// An error carrying the process exit code it maps to.
class CommandError : public Error {
 public:
  CommandError(int exit_code, const std::string& what) : Error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

struct PipelineConfig {
  std::filesystem::path drives;
  std::filesystem::path cohort;
  std::filesystem::path locations;
  /// Optional.
  std::filesystem::path relabels;
  /// Defaults to <out_dir>/features.csv when empty.
  std::filesystem::path features;
  std::filesystem::path out_dir = "out";

  int precision = lifespace::kDefaultPrecision;
  std::string timezone = "America/Chicago";
  ingest::PreprocessConfig preprocess;

  int splits = 1000;
  double train_frac = 0.8;
  std::uint64_t seed = 20240601;
  int cv_folds = 10;
  int threads = 0;
  std::vector<learn::ModelKind> models{learn::ModelKind::c50, learn::ModelKind::rf,
                                       learn::ModelKind::svm};
  learn::Grids grids;

  synthcohort::CohortSpec synth;

  /// Overlays the keys present in a JSON config file onto `*this`.
  void load_json(const std::filesystem::path& path);
  /// Throws CommandError(kExitInput) on out-of-range settings.
  void validate() const;
  std::filesystem::path features_path() const;
};

struct FeatureBuild {
  ingest::RemovalReport removals;
  std::vector<lifespace::LifeSpaceVector> kept;
  std::vector<lifespace::Exclusion> excluded;
  std::vector<std::string> orphans;
  std::vector<std::string> warnings;
};

/// Parse, preprocess, label, relabel, count, normalize, and exclude.
FeatureBuild build_features(const PipelineConfig& cfg);

struct Evaluation {
  std::vector<resample::SplitPlan> plans;
  std::size_t rejections = 0;
  std::vector<resample::SplitResult> results;
  std::vector<resample::ModelReport> reports;
  learn::ModelKind best = learn::ModelKind::c50;
  std::vector<resample::ImportanceEntry> importance;
  std::vector<resample::DriverMisclass> misclass;
};

/// Runs the resampling protocol on already-filtered vectors. Throws
/// CommandError(kExitData) for a single class or too few drivers.
Evaluation evaluate(std::span<const lifespace::LifeSpaceVector> vectors,
                    const PipelineConfig& cfg);

std::string summary_json(const Evaluation& eval, const PipelineConfig& cfg);

/// scatter.csv: driver_id, moca, cogstat, misclass_pct, ca_label.
void write_scatter(std::ostream& out, const Evaluation& eval,
                   std::span<const lifespace::LifeSpaceVector> vectors);

learn::Dataset to_dataset(std::span<const lifespace::LifeSpaceVector> vectors);

// Subcommands. Each returns the exit code and writes into cfg.out_dir;
// diagnostics go to `log`.
int cmd_preprocess(const PipelineConfig& cfg, std::ostream& log);
int cmd_features(const PipelineConfig& cfg, std::ostream& log);
int cmd_evaluate(const PipelineConfig& cfg, std::ostream& log);
int cmd_report(const PipelineConfig& cfg, std::ostream& log);
int cmd_synth(const PipelineConfig& cfg, std::ostream& log);

}  // namespace tripscope::pipeline
