// SPDX-License-Identifier: Apache-2.0

#include "tripscope/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tripscope/csv.hpp"
#include "tripscope/report.hpp"

namespace tripscope::pipeline {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ifstream open_input(const fs::path& path, const char* what) {
  if (path.empty()) throw CommandError(kExitInput, std::string("no ") + what + " path given");
  if (!fs::exists(path)) {
    throw CommandError(kExitInput, std::string(what) + " file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw CommandError(kExitInput, "cannot read " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw CommandError(kExitInput, "cannot write " + (dir / name).string());
  return out;
}

template <typename T>
void note_errors(const csv::ParseResult<T>& parsed, const fs::path& file,
                 std::vector<std::string>& warnings) {
  for (const auto& e : parsed.errors) {
    warnings.push_back(file.filename().string() + ":" + std::to_string(e.line) + ": " + e.message);
  }
}

learn::ModelKind parse_model(const std::string& name) {
  if (name == "c50") return learn::ModelKind::c50;
  if (name == "rf") return learn::ModelKind::rf;
  if (name == "svm") return learn::ModelKind::svm;
  throw CommandError(kExitInput, "unknown model '" + name + "'");
}

ordered_json summary_json(const resample::MetricSummary& s) {
  ordered_json j;
  if (s.n == 0) {
    j["q1"] = j["median"] = j["q3"] = j["sd"] = nullptr;
  } else {
    j["q1"] = s.q1;
    j["median"] = s.median;
    j["q3"] = s.q3;
    j["sd"] = s.sd;
  }
  j["n"] = s.n;
  j["undefined"] = s.undefined;
  return j;
}

int guarded(std::ostream& log, auto&& body) {
  try {
    return body();
  } catch (const CommandError& e) {
    log << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const csv::SchemaError& e) {
    log << "schema error: " << e.what() << '\n';
    return kExitInput;
  } catch (const csv::IoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ingest::ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const lifespace::ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const synthcohort::SpecError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::load_json(const fs::path& path) {
  std::ifstream in = open_input(path, "config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(kExitInput, "config " + path.string() + ": " + e.what());
  }
  try {
    auto path_field = [&](const char* key, fs::path& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    path_field("drives", drives);
    path_field("cohort", cohort);
    path_field("locations", locations);
    path_field("relabels", relabels);
    path_field("features", features);
    path_field("out_dir", out_dir);
    if (j.contains("precision")) precision = j.at("precision").get<int>();
    if (j.contains("timezone")) timezone = j.at("timezone").get<std::string>();
    if (j.contains("state_box")) {
      const auto& b = j.at("state_box");
      preprocess.state_box = {b.at("min_lat").get<double>(), b.at("max_lat").get<double>(),
                              b.at("min_lon").get<double>(), b.at("max_lon").get<double>()};
    }
    if (j.contains("min_drive_miles")) preprocess.min_distance_miles = j.at("min_drive_miles").get<double>();
    if (j.contains("splits")) splits = j.at("splits").get<int>();
    if (j.contains("train_frac")) train_frac = j.at("train_frac").get<double>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("cv_folds")) cv_folds = j.at("cv_folds").get<int>();
    if (j.contains("threads")) threads = j.at("threads").get<int>();
    if (j.contains("models")) {
      models.clear();
      for (const auto& m : j.at("models")) models.push_back(parse_model(m.get<std::string>()));
    }
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      if (g.contains("c50_trials")) grids.c50_trials = g.at("c50_trials").get<std::vector<int>>();
      if (g.contains("rf_trees")) grids.rf_trees = g.at("rf_trees").get<int>();
      if (g.contains("rf_mtry")) grids.rf_mtry = g.at("rf_mtry").get<std::vector<int>>();
      if (g.contains("svm_cost")) grids.svm_cost = g.at("svm_cost").get<std::vector<double>>();
      if (g.contains("svm_gamma")) grids.svm_gamma = g.at("svm_gamma").get<std::vector<double>>();
      if (g.contains("svm_kernels")) {
        grids.svm_kernels.clear();
        for (const auto& k : g.at("svm_kernels")) {
          const auto name = k.get<std::string>();
          if (name != "linear" && name != "rbf") {
            throw CommandError(kExitInput, "unknown kernel '" + name + "'");
          }
          grids.svm_kernels.push_back(name == "linear" ? learn::Kernel::linear : learn::Kernel::rbf);
        }
      }
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      if (s.contains("n_mci")) synth.n_mci = s.at("n_mci").get<int>();
      if (s.contains("n_cu")) synth.n_cu = s.at("n_cu").get<int>();
      if (s.contains("days")) synth.days = s.at("days").get<int>();
      if (s.contains("effect_scale")) synth.effect_scale = s.at("effect_scale").get<double>();
      if (s.contains("overdispersed")) synth.overdispersed = s.at("overdispersed").get<bool>();
      if (s.contains("collide_work_social")) synth.collide_work_social = s.at("collide_work_social").get<bool>();
      if (s.contains("noise_fraction")) synth.noise_fraction = s.at("noise_fraction").get<double>();
      if (s.contains("start_date")) synth.start_date = s.at("start_date").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(kExitInput, "config " + path.string() + ": " + e.what());
  }
}

void PipelineConfig::validate() const {
  if (precision < 1 || precision > geo::kMaxPrecision) {
    throw CommandError(kExitInput, "precision must be in [1, 12]");
  }
  if (!(train_frac > 0 && train_frac < 1)) {
    throw CommandError(kExitInput, "train fraction must be in (0, 1)");
  }
  if (splits < 1) throw CommandError(kExitInput, "split count must be positive");
  if (cv_folds < 2) throw CommandError(kExitInput, "cv folds must be >= 2");
  if (models.empty()) throw CommandError(kExitInput, "no models selected");
  const auto& box = preprocess.state_box;
  if (!(box.min_lat < box.max_lat && box.min_lon < box.max_lon)) {
    throw CommandError(kExitInput, "state box must have min < max on both axes");
  }
  ingest::load_timezone(timezone);
}

fs::path PipelineConfig::features_path() const {
  return features.empty() ? out_dir / "features.csv" : features;
}

// ---------------------------------------------------------------------------
// Features

FeatureBuild build_features(const PipelineConfig& cfg) {
  FeatureBuild out;
  const absl::TimeZone tz = ingest::load_timezone(cfg.timezone);

  std::ifstream drives_in = open_input(cfg.drives, "drives");
  const auto drives = ingest::parse_drives(drives_in);
  note_errors(drives, cfg.drives, out.warnings);

  std::ifstream cohort_in = open_input(cfg.cohort, "cohort");
  const auto cohort = ingest::parse_cohort(cohort_in);
  note_errors(cohort, cfg.cohort, out.warnings);

  std::ifstream locations_in = open_input(cfg.locations, "locations");
  const auto survey = lifespace::parse_locations(locations_in);
  note_errors(survey, cfg.locations, out.warnings);
  const auto books = lifespace::build_location_books(survey.records, cfg.precision);
  note_errors(books, cfg.locations, out.warnings);

  lifespace::RelabelTable relabels;
  if (!cfg.relabels.empty()) {
    std::ifstream relabel_in = open_input(cfg.relabels, "relabels");
    const auto parsed = lifespace::parse_relabels(relabel_in);
    note_errors(parsed, cfg.relabels, out.warnings);
    for (const auto& r : parsed.records) {
      if (r.cell.precision() != cfg.precision) {
        throw lifespace::ConfigError("relabel cell " + r.cell.code() +
                                     " does not match precision " + std::to_string(cfg.precision));
      }
    }
    relabels = lifespace::RelabelTable(parsed.records);
  }

  auto pre = ingest::preprocess(drives.records, cfg.preprocess);
  out.removals = std::move(pre.report);

  std::map<std::string, std::vector<ingest::DriveRecord>> by_driver;
  for (auto& d : pre.kept) by_driver[d.driver_id].push_back(std::move(d));
  std::map<std::string, const lifespace::LocationBook*> book_of;
  for (const auto& b : books.records) book_of[b.driver_id] = &b;
  std::map<std::string, const ingest::DriverProfile*> profile_of;
  for (const auto& p : cohort.records) {
    if (!profile_of.emplace(p.driver_id, &p).second) {
      out.warnings.push_back("duplicate cohort row for " + p.driver_id + "; first kept");
    }
  }
  for (const auto& [id, _] : by_driver) {
    if (!profile_of.contains(id)) {
      out.orphans.push_back(id);
      out.excluded.push_back({id, "orphan_no_cohort_row"});
    }
  }

  std::vector<lifespace::LifeSpaceVector> vectors;
  for (const auto& [id, profile] : profile_of) {
    static const std::vector<ingest::DriveRecord> kNone;
    const auto it = by_driver.find(id);
    const auto& mine = it == by_driver.end() ? kNone : it->second;
    lifespace::LocationBook empty{id, cfg.precision, {}};
    const lifespace::LocationBook& book = book_of.contains(id) ? *book_of[id] : empty;

    std::vector<lifespace::TripLabel> labels;
    labels.reserve(mine.size());
    for (const auto& d : mine) labels.push_back(lifespace::label_trip(d, book));
    labels = lifespace::apply_relabels(labels, relabels);
    lifespace::CategoryCounts counts = lifespace::count_categories(labels, mine, tz);
    counts.driver_id = id;

    int days = 0;
    try {
      days = ingest::effective_days(mine, *profile, tz);
    } catch (const ingest::ExposureError&) {
      out.excluded.push_back({id, "undefined_exposure"});
      continue;
    }
    lifespace::LifeSpaceVector v = lifespace::compute_life_space(counts, days);
    v.ca_label = profile->ca_label;
    v.moca = profile->moca;
    v.cogstat = profile->cogstat;
    vectors.push_back(std::move(v));
  }
  auto filtered = lifespace::exclude_low_activity(vectors);
  out.kept = std::move(filtered.kept);
  out.excluded.insert(out.excluded.end(), filtered.excluded.begin(), filtered.excluded.end());
  std::sort(out.excluded.begin(), out.excluded.end(),
            [](const auto& a, const auto& b) { return a.driver_id < b.driver_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

learn::Dataset to_dataset(std::span<const lifespace::LifeSpaceVector> vectors) {
  std::vector<std::string> names(lifespace::kFeatureNames.begin(), lifespace::kFeatureNames.end());
  learn::Dataset data(std::move(names));
  for (const auto& v : vectors) {
    if (!v.ca_label) throw CommandError(kExitData, "driver " + v.driver_id + " has no label");
    data.add(v.features, *v.ca_label);
  }
  return data;
}

Evaluation evaluate(std::span<const lifespace::LifeSpaceVector> vectors,
                    const PipelineConfig& cfg) {
  const learn::Dataset data = to_dataset(vectors);
  if (!data.has_both_classes()) {
    throw CommandError(kExitData, "class balance: both MCI_AD and CU drivers are required");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * data.size()));
  if (data.size() < 5 || n_train < static_cast<std::size_t>(cfg.cv_folds) || n_train >= data.size()) {
    throw CommandError(kExitData, "cohort of " + std::to_string(data.size()) +
                                      " drivers is below the minimum for " +
                                      std::to_string(cfg.cv_folds) + "-fold tuning");
  }
  Evaluation eval;
  auto splits = resample::make_splits(data.labels(), cfg.splits, cfg.train_frac, cfg.seed);
  eval.plans = std::move(splits.plans);
  eval.rejections = splits.rejections;

  resample::ProtocolConfig protocol;
  protocol.models = cfg.models;
  protocol.grids = cfg.grids;
  protocol.cv_folds = cfg.cv_folds;
  protocol.threads = cfg.threads;
  eval.results = resample::run_protocol(data, eval.plans, protocol);

  for (auto kind : cfg.models) eval.reports.push_back(resample::report_model(eval.results, kind));
  eval.best = resample::select_best_model(eval.reports);
  if (std::ranges::find(cfg.models, learn::ModelKind::c50) != cfg.models.end()) {
    eval.importance = resample::aggregate_importance(eval.results, data.feature_names());
  }
  std::vector<std::string> ids;
  for (const auto& v : vectors) ids.push_back(v.driver_id);
  eval.misclass = resample::driver_misclass(eval.results, eval.plans, data, ids, eval.best);
  return eval;
}

std::string summary_json(const Evaluation& eval, const PipelineConfig& cfg) {
  ordered_json j;
  j["n_drivers"] = eval.misclass.size();
  j["n_splits"] = eval.plans.size();
  j["split_rejections"] = eval.rejections;
  j["train_frac"] = cfg.train_frac;
  j["cv_folds"] = cfg.cv_folds;
  j["seed"] = cfg.seed;
  ordered_json models = ordered_json::object();
  for (const auto& r : eval.reports) {
    ordered_json m;
    m["failed_splits"] = r.failed;
    m["accuracy"] = summary_json(r.accuracy);
    m["precision"] = summary_json(r.precision);
    m["recall"] = summary_json(r.recall);
    m["f1"] = summary_json(r.f1);
    models[std::string(learn::to_string(r.model))] = std::move(m);
  }
  j["models"] = std::move(models);

  ordered_json best;
  best["model"] = learn::to_string(eval.best);
  for (const auto& r : eval.reports) {
    if (r.model != eval.best) continue;
    best["accuracy"] = summary_json(r.accuracy);
    best["precision"] = summary_json(r.precision);
    best["recall"] = summary_json(r.recall);
    best["f1"] = summary_json(r.f1);
  }
  if (!eval.importance.empty()) {
    best["importance_model"] = "c50";
    ordered_json imp = ordered_json::array();
    for (const auto& e : eval.importance) {
      imp.push_back({{"feature", e.feature}, {"importance", e.importance}});
    }
    best["importance"] = std::move(imp);
  }
  ordered_json mis = ordered_json::array();
  std::size_t never = 0;
  for (const auto& d : eval.misclass) {
    ordered_json row{{"driver_id", d.driver_id}, {"n_test", d.n_test}, {"n_miss", d.n_miss}};
    if (d.pct) {
      row["pct"] = *d.pct;
    } else {
      row["pct"] = nullptr;
      ++never;
    }
    mis.push_back(std::move(row));
  }
  best["never_tested"] = never;
  best["misclassification"] = std::move(mis);
  j["best_model"] = std::move(best);
  return j.dump(2) + "\n";
}

void write_scatter(std::ostream& out, const Evaluation& eval,
                   std::span<const lifespace::LifeSpaceVector> vectors) {
  out << "driver_id,moca,cogstat,misclass_pct,ca_label\n";
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    const auto& m = eval.misclass[i];
    out << v.driver_id << ',' << (v.moca ? std::to_string(*v.moca) : "") << ','
        << (v.cogstat ? csv::format_fixed(*v.cogstat, 6) : "") << ','
        << (m.pct ? csv::format_fixed(*m.pct, 6) : "") << ','
        << (v.ca_label ? std::string(to_string(*v.ca_label)) : "") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_preprocess(const PipelineConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    const absl::TimeZone tz = ingest::load_timezone(cfg.timezone);
    std::ifstream in = open_input(cfg.drives, "drives");
    const auto parsed = ingest::parse_drives(in);
    std::vector<std::string> warnings;
    note_errors(parsed, cfg.drives, warnings);
    for (const auto& w : warnings) log << "warning: " << w << '\n';
    const auto result = ingest::preprocess(parsed.records, cfg.preprocess);
    auto clean = open_output(cfg.out_dir, "clean_drives.csv");
    ingest::write_drives(clean, result.kept, tz);
    open_output(cfg.out_dir, "removals.json") << result.report.to_json();
    log << "kept " << result.report.totals.kept << " of " << result.report.totals.total()
        << " drives\n";
    return kExitOk;
  });
}

int cmd_features(const PipelineConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    const FeatureBuild build = build_features(cfg);
    for (const auto& w : build.warnings) log << "warning: " << w << '\n';
    auto features = open_output(cfg.out_dir, "features.csv");
    lifespace::write_features(features, build.kept);
    auto exclusions = open_output(cfg.out_dir, "exclusions.csv");
    exclusions << "driver_id,reason\n";
    for (const auto& e : build.excluded) exclusions << e.driver_id << ',' << e.reason << '\n';
    auto orphans = open_output(cfg.out_dir, "orphans.csv");
    orphans << "driver_id\n";
    for (const auto& id : build.orphans) orphans << id << '\n';
    open_output(cfg.out_dir, "removals.json") << build.removals.to_json();
    log << build.kept.size() << " drivers kept, " << build.excluded.size() << " excluded\n";
    return kExitOk;
  });
}

int cmd_evaluate(const PipelineConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    std::ifstream in = open_input(cfg.features_path(), "features");
    auto parsed = lifespace::read_features(in);
    std::vector<std::string> warnings;
    note_errors(parsed, cfg.features_path(), warnings);
    for (const auto& w : warnings) log << "warning: " << w << '\n';
    const auto filtered = lifespace::exclude_low_activity(parsed.records);
    for (const auto& e : filtered.excluded) {
      log << "excluded " << e.driver_id << ": " << e.reason << '\n';
    }
    const Evaluation eval = evaluate(filtered.kept, cfg);
    for (const auto& r : eval.reports) {
      if (r.failed) log << "warning: " << learn::to_string(r.model) << " failed on " << r.failed << " splits\n";
    }
    auto metrics = open_output(cfg.out_dir, "metrics.csv");
    resample::write_metrics(metrics, eval.results);
    open_output(cfg.out_dir, "summary.json") << summary_json(eval, cfg);
    auto scatter = open_output(cfg.out_dir, "scatter.csv");
    write_scatter(scatter, eval, filtered.kept);
    log << "best model: " << learn::to_string(eval.best) << '\n';
    return kExitOk;
  });
}

int cmd_report(const PipelineConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    std::ifstream in = open_input(cfg.features_path(), "features");
    const auto parsed = lifespace::read_features(in);
    const auto rows = report::class_summary(parsed.records);
    if (rows.empty()) {
      throw CommandError(kExitInput, "features file has no labeled drivers");
    }
    for (const auto& r : rows) {
      if (!r.sd_defined && r.variable == lifespace::kFeatureNames.front()) {
        log << "warning: class " << to_string(r.label) << " has a single driver; SD reported as 0\n";
      }
    }
    auto summary = open_output(cfg.out_dir, "class_summary.csv");
    report::write_class_summary(summary, rows);
    open_output(cfg.out_dir, "radial.svg") << report::radial_svg(rows);
    return kExitOk;
  });
}

int cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    synthcohort::CohortSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    spec.precision = cfg.precision;
    spec.timezone = cfg.timezone;
    const auto cohort = synthcohort::generate(spec);
    for (const auto& w : cohort.warnings) log << "warning: " << w << '\n';
    open_output(cfg.out_dir, "drives.csv") << cohort.drives_csv;
    open_output(cfg.out_dir, "locations.csv") << cohort.locations_csv;
    open_output(cfg.out_dir, "cohort.csv") << cohort.cohort_csv;
    return kExitOk;
  });
}

}  // namespace tripscope::pipeline
