// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tripscope/pipeline.hpp"

namespace {

using tripscope::pipeline::PipelineConfig;

struct Overrides {
  std::string config;
  std::optional<std::string> drives, cohort, locations, relabels, features, out_dir, timezone;
  std::optional<int> precision, splits, cv_folds, threads;
  std::optional<double> train_frac;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_mci, n_cu, days;
  std::optional<double> effect_scale;

  void apply(PipelineConfig& cfg) const {
    if (!config.empty()) cfg.load_json(config);
    if (drives) cfg.drives = *drives;
    if (cohort) cfg.cohort = *cohort;
    if (locations) cfg.locations = *locations;
    if (relabels) cfg.relabels = *relabels;
    if (features) cfg.features = *features;
    if (out_dir) cfg.out_dir = *out_dir;
    if (timezone) cfg.timezone = *timezone;
    if (precision) cfg.precision = *precision;
    if (splits) cfg.splits = *splits;
    if (cv_folds) cfg.cv_folds = *cv_folds;
    if (threads) cfg.threads = *threads;
    if (train_frac) cfg.train_frac = *train_frac;
    if (seed) cfg.seed = *seed;
    if (n_mci) cfg.synth.n_mci = *n_mci;
    if (n_cu) cfg.synth.n_cu = *n_cu;
    if (days) cfg.synth.days = *days;
    if (effect_scale) cfg.synth.effect_scale = *effect_scale;
  }
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "JSON config file");
  app->add_option("-o,--out-dir", o.out_dir, "Output directory");
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--precision", o.precision, "Geohash precision (1-12)");
  app->add_option("--timezone", o.timezone, "IANA time zone for local dates");
}

void add_inputs(CLI::App* app, Overrides& o) {
  app->add_option("--drives", o.drives, "drives.csv");
  app->add_option("--cohort", o.cohort, "cohort.csv");
  app->add_option("--locations", o.locations, "locations.csv");
  app->add_option("--relabels", o.relabels, "relabels.csv (optional)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = tripscope::pipeline;
  CLI::App app{"Driving life-space features and cognitive-status classification"};
  app.require_subcommand(1);
  Overrides o;

  auto* pre = app.add_subcommand("preprocess", "Clean drives and write the removal report");
  add_common(pre, o);
  pre->add_option("--drives", o.drives, "drives.csv");

  auto* feat = app.add_subcommand("features", "Compute per-driver life-space variables");
  add_common(feat, o);
  add_inputs(feat, o);

  auto* eval = app.add_subcommand("evaluate", "Run the resampling protocol");
  add_common(eval, o);
  eval->add_option("--features", o.features, "features.csv");
  eval->add_option("--splits", o.splits, "Number of random splits");
  eval->add_option("--train-frac", o.train_frac, "Training fraction");
  eval->add_option("--cv-folds", o.cv_folds, "Cross-validation folds");
  eval->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* rep = app.add_subcommand("report", "Per-class summary table and radial plot");
  add_common(rep, o);
  rep->add_option("--features", o.features, "features.csv");

  auto* syn = app.add_subcommand("synth", "Generate a synthetic cohort");
  add_common(syn, o);
  syn->add_option("--n-mci", o.n_mci, "MCI_AD drivers");
  syn->add_option("--n-cu", o.n_cu, "CU drivers");
  syn->add_option("--days", o.days, "Study days");
  syn->add_option("--effect-scale", o.effect_scale, "Scale on MCI minus CU rate gaps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pl::kExitInput;
  }

  PipelineConfig cfg;
  try {
    o.apply(cfg);
  } catch (const pl::CommandError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  }

  if (*pre) return pl::cmd_preprocess(cfg, std::cerr);
  if (*feat) return pl::cmd_features(cfg, std::cerr);
  if (*eval) return pl::cmd_evaluate(cfg, std::cerr);
  if (*rep) return pl::cmd_report(cfg, std::cerr);
  return pl::cmd_synth(cfg, std::cerr);
}
