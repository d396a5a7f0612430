// SPDX-License-Identifier: Apache-2.0

#include <filesystem>

#include "json.hpp"

#include "cli_run.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "tripscope/lifespace.hpp"

namespace fs = std::filesystem;
using cli_run::run;
using cli_run::slurp;
using cli_run::spill;

namespace {

const fs::path kWork = fs::absolute("cli_work");

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

cli_run::Result cli(const std::string& args) { return run(args, kWork / "last.log"); }

const char* kSmallConfig = R"({
  "splits": 3,
  "cv_folds": 3,
  "threads": 1,
  "grids": {"c50_trials": [1, 5], "rf_trees": 20, "rf_mtry": [2, 4],
            "svm_kernels": ["linear", "rbf"], "svm_cost": [1, 10], "svm_gamma": [0.0833]}
})";

std::string feature_header() {
  std::string h;
  for (const auto& c : tripscope::lifespace::kFeatureFileColumns) h += (h.empty() ? "" : ",") + c;
  return h + "\n";
}

std::string feature_row(const std::string& id, const std::string& label, double home) {
  std::string row = id;
  for (int f = 0; f < 12; ++f) row += "," + std::to_string(f == 0 ? home : 1.0);
  return row + "," + label + ",25,0.1,100\n";
}

struct Synth {
  fs::path dir;
  std::string common;
};

// One small synthetic cohort shared by the tests below.
const Synth& synth() {
  static const Synth s = [] {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    Synth out;
    out.dir = kWork / "synth";
    spill(kWork / "small.json", kSmallConfig);
    const auto r = cli("synth --n-mci 8 --n-cu 12 --days 40 --effect-scale 3 --seed 4 -o " +
                             q(out.dir));
    REQUIRE(r.code == 0);
    out.common = "--drives " + q(out.dir / "drives.csv") + " --cohort " +
                  q(out.dir / "cohort.csv") + " --locations " + q(out.dir / "locations.csv");
    return out;
  }();
  return s;
}

}  // namespace

TEST_CASE("synth writes the three inputs") {
  const auto& s = synth();
  for (const char* f : {"drives.csv", "locations.csv", "cohort.csv"}) {
    CHECK(fs::file_size(s.dir / f) > 0);
  }
  const auto again = cli("synth --n-mci 8 --n-cu 12 --days 40 --effect-scale 3 --seed 4 -o " +
                               q(kWork / "synth2"));
  REQUIRE(again.code == 0);
  CHECK(slurp(kWork / "synth2" / "drives.csv") == slurp(s.dir / "drives.csv"));
}

TEST_CASE("preprocess") {
  spill(kWork / "ten" / "drives.csv", fixtures::kTenDrives);
  SUBCASE("ten-drive fixture") {
    const auto r = cli("preprocess --drives " + q(kWork / "ten" / "drives.csv") + " -o " +
                             q(kWork / "ten" / "out"));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(kWork / "ten" / "out" / "removals.json"));
    CHECK(j["incomplete"] == 1);
    CHECK(j["not_self_or_maintenance"] == 1);
    CHECK(j["short_drive"] == 1);
    CHECK(j["out_of_state"] == 1);
    CHECK(j["kept"] == 6);
    CHECK(j["total"] == 10);
  }
  SUBCASE("header only") {
    spill(kWork / "empty" / "drives.csv",
          fixtures::kTenDrives.substr(0, fixtures::kTenDrives.find('\n') + 1));
    const auto r = cli("preprocess --drives " + q(kWork / "empty" / "drives.csv") + " -o " +
                             q(kWork / "empty" / "out"));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(kWork / "empty" / "out" / "removals.json"));
    CHECK(j["kept"] == 0);
    CHECK(j["total"] == 0);
  }
  SUBCASE("missing input names the path") {
    const auto r = cli("preprocess --drives " + q(kWork / "nowhere.csv") + " -o " +
                             q(kWork / "x"));
    CHECK(r.code == 2);
    CHECK(r.output.find("nowhere.csv") != std::string::npos);
  }
  SUBCASE("missing header") {
    const std::string body = fixtures::kTenDrives.substr(fixtures::kTenDrives.find('\n') + 1);
    spill(kWork / "nohdr" / "drives.csv", body);
    const auto r = cli("preprocess --drives " + q(kWork / "nohdr" / "drives.csv") + " -o " +
                             q(kWork / "nohdr" / "out"));
    CHECK(r.code == 2);
  }
}

TEST_CASE("configuration errors") {
  const auto& s = synth();
  CHECK(cli("features " + s.common + " --precision 13 -o " + q(kWork / "x")).code == 2);
  CHECK(cli("features " + s.common + " --timezone Mars/Olympus -o " + q(kWork / "x")).code == 2);
  CHECK(cli("features --no-such-flag").code == 2);
  CHECK(cli("evaluate -c " + q(kWork / "missing.json")).code == 2);
  spill(kWork / "bad.json", "{ not json");
  CHECK(cli("evaluate -c " + q(kWork / "bad.json")).code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("features, orphans, and exclusions") {
  const auto& s = synth();
  // One extra driver with a single trip and one driver missing from the cohort.
  std::string drives = slurp(s.dir / "drives.csv");
  drives += "zz_orphan,o1,2019-03-05T08:00:00-06:00,2019-03-05T08:20:00-06:00,41.2565,-95.9345,41.3000,-96.0500,1,0\n";
  drives += "zz_single,s1,2019-03-05T08:00:00-06:00,2019-03-05T08:20:00-06:00,41.2565,-95.9345,41.3000,-96.0500,1,0\n";
  spill(kWork / "feat" / "drives.csv", drives);
  spill(kWork / "feat" / "cohort.csv", slurp(s.dir / "cohort.csv") + "zz_single,CU,27,0.4,40\n");
  const std::string args = "features --drives " + q(kWork / "feat" / "drives.csv") +
                           " --cohort " + q(kWork / "feat" / "cohort.csv") + " --locations " +
                           q(s.dir / "locations.csv");
  const auto r = cli(args + " -o " + q(kWork / "feat" / "a"));
  REQUIRE(r.code == 0);
  const std::string features = slurp(kWork / "feat" / "a" / "features.csv");
  const auto rows = std::count(features.begin(), features.end(), '\n') - 1;
  CHECK(rows <= 20);
  CHECK(rows >= 15);
  CHECK(features.find("zz_") == std::string::npos);
  CHECK(slurp(kWork / "feat" / "a" / "orphans.csv").find("zz_orphan") != std::string::npos);
  const std::string excl = slurp(kWork / "feat" / "a" / "exclusions.csv");
  CHECK(excl.find("zz_single,low_activity") != std::string::npos);

  const auto again = cli(args + " -o " + q(kWork / "feat" / "b"));
  REQUIRE(again.code == 0);
  CHECK(slurp(kWork / "feat" / "b" / "features.csv") == features);
}

TEST_CASE("evaluate and report") {
  const auto& s = synth();
  const fs::path out = kWork / "eval";
  REQUIRE(cli("features " + s.common + " -o " + q(out)).code == 0);
  const auto r = cli("evaluate -c " + q(kWork / "small.json") + " -o " + q(out));
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  for (const char* m : {"c50", "rf", "svm"}) CHECK(summary["models"].contains(m));
  CHECK(summary.contains("best_model"));
  CHECK(summary["n_splits"] == 3);
  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(metrics.rfind("split_id,model,accuracy,tp,fp,fn,tn\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 10);
  CHECK(fs::exists(out / "scatter.csv"));

  SUBCASE("seed change keeps the schema") {
    const fs::path other = kWork / "eval_seed";
    fs::create_directories(other);
    fs::copy_file(out / "features.csv", other / "features.csv");
    REQUIRE(cli("evaluate -c " + q(kWork / "small.json") + " --seed 99 -o " + q(other)).code == 0);
    const std::string m2 = slurp(other / "metrics.csv");
    CHECK(m2 != metrics);
    CHECK(m2.substr(0, m2.find('\n')) == metrics.substr(0, metrics.find('\n')));
  }
  SUBCASE("report is deterministic") {
    REQUIRE(cli("report -o " + q(out)).code == 0);
    const std::string svg = slurp(out / "radial.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    REQUIRE(cli("report -o " + q(out)).code == 0);
    CHECK(slurp(out / "radial.svg") == svg);
    CHECK(slurp(out / "class_summary.csv").rfind("ca_label,variable,mean,sd,n,sd_defined", 0) == 0);
  }
}

TEST_CASE("data constraints exit with 3") {
  SUBCASE("single class") {
    std::string f = feature_header();
    for (int i = 0; i < 12; ++i) f += feature_row("c" + std::to_string(i), "CU", 10 + i);
    spill(kWork / "one_class" / "features.csv", f);
    const auto r = cli("evaluate -c " + q(kWork / "small.json") + " -o " +
                             q(kWork / "one_class"));
    CHECK(r.code == 3);
  }
  SUBCASE("two drivers") {
    const std::string f = feature_header() + feature_row("a", "CU", 10) +
                          feature_row("b", "MCI_AD", 20);
    spill(kWork / "two" / "features.csv", f);
    CHECK(cli("evaluate -c " + q(kWork / "small.json") + " -o " + q(kWork / "two")).code == 3);
  }
  SUBCASE("empty features file is an input error for report") {
    spill(kWork / "empty_feat" / "features.csv", feature_header());
    CHECK(cli("report -o " + q(kWork / "empty_feat")).code == 2);
  }
}
