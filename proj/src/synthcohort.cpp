// SPDX-License-Identifier: Apache-2.0

#include "tripscope/synthcohort.hpp"

#include <absl/time/civil_time.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "tripscope/csv.hpp"
#include "tripscope/geo.hpp"
#include "tripscope/ingest.hpp"

namespace tripscope::synthcohort {
namespace {

using lifespace::Category;
using Rng = std::mt19937_64;

constexpr double kMilesPerDegreeLat = 69.09;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

geo::GeoPoint offset_miles(const geo::GeoPoint& from, double miles, double bearing) {
  const double dlat = miles * std::cos(bearing) / kMilesPerDegreeLat;
  const double dlon = miles * std::sin(bearing) /
                      (kMilesPerDegreeLat * std::cos(from.lat() * std::numbers::pi / 180));
  return geo::GeoPoint(from.lat() + dlat, from.lon() + dlon);
}

// Uniform point well inside a cell so it hashes back to the same cell.
geo::GeoPoint point_in_cell(const geo::Geohash& cell, Rng& rng) {
  const geo::BoundingBox box = geo::decode_bbox(cell);
  const geo::GeoPoint c = geo::center(cell);
  return geo::GeoPoint(c.lat() + uniform(rng, -0.4, 0.4) * box.lat_span(),
                       c.lon() + uniform(rng, -0.4, 0.4) * box.lon_span());
}

struct Location {
  Category category;
  geo::GeoPoint point;
  geo::Geohash cell;
};

struct DriverPlan {
  std::string id;
  CognitiveLabel label;
  geo::GeoPoint home{41.25, -96.0};
  std::vector<Location> locations;
  std::set<geo::Geohash> surveyed;
};

struct Drive {
  absl::Time start_time;
  absl::Time end_time;
  std::optional<geo::GeoPoint> start;
  std::optional<geo::GeoPoint> end;
  bool self_driven = true;
  bool maintenance = false;
};

class Generator {
 public:
  explicit Generator(const CohortSpec& spec)
      : spec_(spec), rng_(spec.seed), tz_(ingest::load_timezone(spec.timezone)) {
    if (!absl::ParseCivilTime(spec.start_date, &first_day_)) {
      throw SpecError("bad start_date '" + spec.start_date + "'");
    }
    for (int d = 0; d < spec.days; ++d) {
      const absl::CivilDay day = first_day_ + d;
      const auto wd = absl::GetWeekday(day);
      const bool weekend = wd == absl::Weekday::saturday || wd == absl::Weekday::sunday;
      (weekend ? weekend_days_ : weekday_days_).push_back(day);
    }
  }

  SyntheticCohort run() {
    SyntheticCohort out;
    std::ostringstream drives, locations, cohort;
    drives << csv::join(ingest::kDriveColumns) << '\n';
    locations << csv::join(lifespace::kLocationColumns) << '\n';
    cohort << csv::join(ingest::kCohortColumns) << '\n';

    const int n = spec_.n_mci + spec_.n_cu;
    for (int i = 0; i < n; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "d%03d", i + 1);
      DriverPlan driver = plan_driver(id, i < spec_.n_mci ? CognitiveLabel::mci_ad
                                                          : CognitiveLabel::cu);
      for (const auto& loc : driver.locations) {
        locations << driver.id << ',' << lifespace::to_string(loc.category) << ','
                  << csv::format_fixed(loc.point.lat(), 6) << ','
                  << csv::format_fixed(loc.point.lon(), 6) << '\n';
      }
      std::vector<Drive> trips = make_trips(driver, out.warnings);
      std::sort(trips.begin(), trips.end(),
                [](const Drive& a, const Drive& b) { return a.start_time < b.start_time; });
      int seq = 0;
      for (const auto& d : trips) {
        auto coord = [](const std::optional<geo::GeoPoint>& p, bool lat) {
          return p ? csv::format_fixed(lat ? p->lat() : p->lon(), 6) : std::string();
        };
        drives << driver.id << ',' << driver.id << '-' << ++seq << ','
               << ingest::format_timestamp(d.start_time, tz_) << ','
               << ingest::format_timestamp(d.end_time, tz_) << ',' << coord(d.start, true)
               << ',' << coord(d.start, false) << ',' << coord(d.end, true) << ','
               << coord(d.end, false) << ',' << (d.self_driven ? 1 : 0) << ','
               << (d.maintenance ? 1 : 0) << '\n';
      }
      write_profile(cohort, driver);
    }
    out.drives_csv = drives.str();
    out.locations_csv = locations.str();
    out.cohort_csv = cohort.str();
    return out;
  }

 private:
  geo::Geohash cell_of(const geo::GeoPoint& p) const { return geo::encode(p, spec_.precision); }

  // A point near `anchor` whose cell is not yet surveyed.
  geo::GeoPoint fresh_point(const DriverPlan& driver, const geo::GeoPoint& anchor,
                            double max_miles) {
    for (;;) {
      const geo::GeoPoint p = offset_miles(anchor, uniform(rng_, 0.3, max_miles),
                                           uniform(rng_, 0, 2 * std::numbers::pi));
      if (!driver.surveyed.contains(cell_of(p))) return p;
    }
  }

  void add_location(DriverPlan& driver, Category c, const geo::GeoPoint& p) {
    const geo::Geohash cell = cell_of(p);
    driver.surveyed.insert(cell);
    driver.locations.push_back({c, p, cell});
  }

  DriverPlan plan_driver(const std::string& id, CognitiveLabel label) {
    DriverPlan d;
    d.id = id;
    d.label = label;
    d.home = geo::GeoPoint(uniform(rng_, 41.15, 41.35), uniform(rng_, -96.20, -95.95));
    add_location(d, Category::home, d.home);
    const std::pair<Category, int> layout[] = {
        {Category::work, 1},      {Category::doctor, 1},   {Category::groceries, 2},
        {Category::prescriptions, 1}, {Category::gas, 1},  {Category::social, 1},
        {Category::exercise, 1},  {Category::religion, 1}, {Category::other, 1}};
    for (auto [category, count] : layout) {
      for (int k = 0; k < count; ++k) {
        if (category == Category::social && spec_.collide_work_social) {
          const Location& work = d.locations[1];
          const geo::GeoPoint p = point_in_cell(work.cell, rng_);
          d.locations.push_back({category, p, work.cell});
          continue;
        }
        add_location(d, category, fresh_point(d, d.home, 10.0));
      }
    }
    return d;
  }

  std::vector<const Location*> locations_of(const DriverPlan& d,
                                            std::initializer_list<Category> cats) const {
    std::vector<const Location*> out;
    for (const auto& loc : d.locations) {
      if (std::find(cats.begin(), cats.end(), loc.category) != cats.end()) out.push_back(&loc);
    }
    return out;
  }

  int draw_count(double rate, double sd) {
    double per_100 = rate;
    if (spec_.overdispersed && rate > 0 && sd > 0) {
      const double shape = rate * rate / (sd * sd);
      per_100 = std::gamma_distribution<double>(shape, sd * sd / rate)(rng_);
    }
    const double lambda = per_100 * spec_.days / 100.0;
    if (lambda <= 0) return 0;
    return std::poisson_distribution<int>(lambda)(rng_);
  }

  absl::Time arrival(bool weekday) {
    const auto& pool = weekday ? weekday_days_ : weekend_days_;
    const absl::CivilDay day =
        pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
    const int second = std::uniform_int_distribution<int>(7 * 3600, 21 * 3600)(rng_);
    return absl::FromCivil(absl::CivilSecond(day) + second, tz_);
  }

  Drive trip_to(const geo::GeoPoint& end, absl::Time end_time) {
    Drive d;
    d.end = end;
    d.start = offset_miles(end, uniform(rng_, 1.0, 8.0), uniform(rng_, 0, 2 * std::numbers::pi));
    d.end_time = end_time;
    d.start_time = end_time - absl::Seconds(std::uniform_int_distribution<int>(300, 2700)(rng_));
    return d;
  }

  Drive noise_drive(const DriverPlan& driver) {
    Drive d = trip_to(point_in_cell(driver.locations.front().cell, rng_),
                      arrival(std::bernoulli_distribution(5.0 / 7)(rng_)));
    switch (std::uniform_int_distribution<int>(0, 4)(rng_)) {
      case 0: d.end.reset(); break;
      case 1: d.self_driven = false; break;
      case 2: d.maintenance = true; break;
      case 3: d.start = offset_miles(*d.end, 0.05, uniform(rng_, 0, 2 * std::numbers::pi)); break;
      default: d.end = geo::GeoPoint(41.59, -93.62); break;
    }
    return d;
  }

  std::vector<Drive> make_trips(const DriverPlan& driver, std::vector<std::string>& warnings) {
    const Rates rates = spec_.rates_for(driver.label);
    const Rates& sds = driver.label == CognitiveLabel::mci_ad ? spec_.mci_sds : spec_.cu_sds;
    using enum lifespace::Feature;
    std::vector<Drive> trips;
    int counted = 0;
    for (int f = 0; f < lifespace::kFeatureCount; ++f) {
      const bool weekday = f % 2 == 0;
      if ((weekday ? weekday_days_ : weekend_days_).empty()) {
        if (rates[f] > 0) {
          warnings.push_back(driver.id + ": study window has no " +
                             (weekday ? "weekdays" : "weekend days") + " for " +
                             std::string(lifespace::kFeatureNames[f]));
        }
        continue;
      }
      const int count = draw_count(rates[f], sds[f]);
      for (int k = 0; k < count; ++k) {
        geo::GeoPoint end = driver.home;
        const int group = f / 2;
        std::vector<const Location*> choices;
        switch (group) {
          case home_wkd / 2: choices = locations_of(driver, {Category::home}); break;
          case work_wkd / 2: choices = locations_of(driver, {Category::work}); break;
          case errand_wkd / 2:
            choices = locations_of(driver, {Category::groceries, Category::gas,
                                            Category::prescriptions});
            break;
          case medical_wkd / 2: choices = locations_of(driver, {Category::doctor}); break;
          case social_wkd / 2:
            choices = locations_of(driver, {Category::social, Category::exercise,
                                            Category::religion});
            break;
          default:
            if (std::bernoulli_distribution(spec_.other_share)(rng_)) {
              choices = locations_of(driver, {Category::other});
            }
            break;
        }
        if (choices.empty()) {
          end = fresh_point(driver, driver.home, 15.0);
        } else {
          const auto* loc =
              choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng_)];
          end = point_in_cell(loc->cell, rng_);
        }
        trips.push_back(trip_to(end, arrival(weekday)));
        ++counted;
      }
    }
    if (counted == 0) warnings.push_back(driver.id + ": no trips generated");
    const int noise = std::binomial_distribution<int>(
        std::max(counted, 1), std::clamp(spec_.noise_fraction, 0.0, 1.0))(rng_);
    for (int k = 0; k < noise; ++k) trips.push_back(noise_drive(driver));
    return trips;
  }

  void write_profile(std::ostream& out, const DriverPlan& d) {
    const bool mci = d.label == CognitiveLabel::mci_ad;
    std::normal_distribution<double> moca(mci ? 22.0 : 26.5, mci ? 3.0 : 2.0);
    std::normal_distribution<double> cogstat(mci ? 410.0 : 460.0, 35.0);
    const int m = std::clamp(static_cast<int>(std::lround(moca(rng_))), 0, 30);
    out << d.id << ',' << to_string(d.label) << ',' << m << ','
        << csv::format_fixed(cogstat(rng_), 1) << ',' << spec_.days << '\n';
  }

  const CohortSpec& spec_;
  Rng rng_;
  absl::TimeZone tz_;
  absl::CivilDay first_day_;
  std::vector<absl::CivilDay> weekday_days_;
  std::vector<absl::CivilDay> weekend_days_;
};

}  // namespace

void CohortSpec::validate() const {
  if (n_mci < 1 || n_cu < 1) throw SpecError("class counts must be >= 1");
  if (days < 1) throw SpecError("days must be >= 1");
  if (effect_scale < 0) throw SpecError("effect_scale must be >= 0");
  if (precision < 1 || precision > geo::kMaxPrecision) throw SpecError("bad precision");
  for (const Rates* r : {&mci_rates, &cu_rates, &mci_sds, &cu_sds}) {
    for (double v : *r) {
      if (!(v >= 0)) throw SpecError("rates and SDs must be >= 0");
    }
  }
}

Rates CohortSpec::rates_for(CognitiveLabel label) const {
  if (label == CognitiveLabel::cu) return cu_rates;
  Rates out{};
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = std::max(0.0, cu_rates[f] + effect_scale * (mci_rates[f] - cu_rates[f]));
  }
  return out;
}

SyntheticCohort generate(const CohortSpec& spec) {
  spec.validate();
  Generator gen(spec);
  SyntheticCohort out = gen.run();
  double expected = 0;
  for (auto label : {CognitiveLabel::mci_ad, CognitiveLabel::cu}) {
    for (double r : spec.rates_for(label)) expected += r;
  }
  if (expected <= 0) out.warnings.insert(out.warnings.begin(), "degenerate spec: zero expected trips");
  return out;
}

}  // namespace tripscope::synthcohort
