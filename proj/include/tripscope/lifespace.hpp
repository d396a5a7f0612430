// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <absl/time/time.h>

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tripscope/common.hpp"
#include "tripscope/csv.hpp"
#include "tripscope/geo.hpp"
#include "tripscope/ingest.hpp"

namespace tripscope::lifespace {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kDefaultPrecision = 7;

/// The ten surveyed destination categories.
enum class Category {
  home,
  work,
  doctor,
  groceries,
  prescriptions,
  gas,
  social,
  exercise,
  religion,
  other,
};
inline constexpr int kCategoryCount = 10;

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

// ---------------------------------------------------------------------------
// Location survey

struct SurveyRow {
  std::size_t line = 0;
  std::string driver_id;
  std::string category;
  double lat = 0;
  double lon = 0;
};

inline const std::vector<std::string> kLocationColumns{"driver_id", "category",
                                                       "lat", "lon"};

/// Surveyed locations of one driver, hashed at a single precision.
struct LocationBook {
  std::string driver_id;
  int precision = kDefaultPrecision;
  std::map<Category, std::set<geo::Geohash>> entries;

  /// Categories whose cell set contains `cell`.
  std::set<Category> match(const geo::Geohash& cell) const;
};

csv::ParseResult<SurveyRow> parse_locations(std::istream& in);

/// One geohash per survey row; duplicates within a category collapse.
/// Unknown category text becomes a row error.
csv::ParseResult<LocationBook> build_location_books(std::span<const SurveyRow> rows,
                                                    int precision);

// ---------------------------------------------------------------------------
// Trip labeling

enum class Disposition { single, unknown, multi_label_excluded };

struct TripLabel {
  std::string driver_id;
  std::string drive_id;
  geo::Geohash end_cell;
  std::set<Category> matched;
  Disposition disposition = Disposition::unknown;

  /// The category of a single-labeled trip.
  std::optional<Category> category() const {
    if (disposition != Disposition::single) return std::nullopt;
    return *matched.begin();
  }
};

/// Matches the drive's end cell against the book by geohash equality.
/// Throws PreconditionError when the drive has no end point.
TripLabel label_trip(const ingest::DriveRecord& drive, const LocationBook& book);

/// Per-driver, per-cell override of an `other` or unknown destination.
/// An empty `category` reassigns the trip to unknown.
struct Relabel {
  std::string driver_id;
  geo::Geohash cell;
  std::optional<Category> category;
};

inline const std::vector<std::string> kRelabelColumns{"driver_id", "geohash",
                                                      "new_category"};

/// Parses relabels.csv. Targets outside {social, groceries, gas,
/// prescriptions, doctor, exercise, religion, unknown} and conflicting
/// duplicate rows throw ConfigError; malformed rows are row errors.
csv::ParseResult<Relabel> parse_relabels(std::istream& in);

class RelabelTable {
 public:
  RelabelTable() = default;
  explicit RelabelTable(std::span<const Relabel> rows);

  /// nullptr when no override exists for the driver's cell.
  const Relabel* find(const std::string& driver_id, const geo::Geohash& cell) const;
  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }

 private:
  std::map<std::pair<std::string, geo::Geohash>, Relabel> rows_;
};

/// Reassigns single(other) and unknown trips whose end cell has an override.
std::vector<TripLabel> apply_relabels(std::span<const TripLabel> labels,
                                      const RelabelTable& table);

// ---------------------------------------------------------------------------
// Counting and features

/// Index of the reserved unknown pseudo-category in CategoryCounts.
inline constexpr int kUnknownIndex = kCategoryCount;
inline constexpr int kWeekend = 0;
inline constexpr int kWeekday = 1;

/// Trips per destination and day type. Row kUnknownIndex holds unknown trips.
struct CategoryCounts {
  std::string driver_id;
  std::array<std::array<int, 2>, kCategoryCount + 1> nd{};
  int multi_label_excluded = 0;

  int at(Category c, int day_type) const {
    return nd[static_cast<std::size_t>(c)][static_cast<std::size_t>(day_type)];
  }
  int unknown(int day_type) const {
    return nd[kUnknownIndex][static_cast<std::size_t>(day_type)];
  }
  int total() const;
};

/// True when `t` falls Monday through Friday in `tz`.
bool is_weekday(absl::Time t, const absl::TimeZone& tz);

/// Tallies labels per category and day type. `labels` and `drives` are
/// index-aligned; the day type comes from each drive's local end date.
CategoryCounts count_categories(std::span<const TripLabel> labels,
                                std::span<const ingest::DriveRecord> drives,
                                const absl::TimeZone& tz);

inline constexpr int kFeatureCount = 12;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "home_wkd",    "home_wkn",    "work_wkd",   "work_wkn",
    "errand_wkd",  "errand_wkn",  "medical_wkd", "medical_wkn",
    "social_wkd",  "social_wkn",  "unknown_wkd", "unknown_wkn"};

enum Feature : int {
  home_wkd,
  home_wkn,
  work_wkd,
  work_wkn,
  errand_wkd,
  errand_wkn,
  medical_wkd,
  medical_wkn,
  social_wkd,
  social_wkn,
  unknown_wkd,
  unknown_wkn,
};

struct LifeSpaceVector {
  std::string driver_id;
  /// Trips per 100 days, in kFeatureNames order.
  std::array<double, kFeatureCount> features{};
  /// Un-normalized trip counts behind `features`.
  std::array<int, kFeatureCount> raw_counts{};
  std::optional<CognitiveLabel> ca_label;
  std::optional<int> moca;
  std::optional<double> cogstat;
  int effective_days = 1;

  int total_trips() const;
};

/// Groups categories into the twelve variables and scales each by
/// 100 / effective_days. Trips still labeled `other` count as unknown.
LifeSpaceVector compute_life_space(const CategoryCounts& counts, int effective_days);

struct Exclusion {
  std::string driver_id;
  std::string reason;
};

struct ExclusionResult {
  std::vector<LifeSpaceVector> kept;
  std::vector<Exclusion> excluded;
};

inline constexpr int kMinTotalTrips = 2;

/// Drops drivers with fewer than kMinTotalTrips counted trips or a missing
/// label, MoCA, or COGSTAT score.
ExclusionResult exclude_low_activity(std::span<const LifeSpaceVector> vectors);

inline const std::vector<std::string> kFeatureFileColumns = [] {
  std::vector<std::string> cols{"driver_id"};
  for (auto name : kFeatureNames) cols.emplace_back(name);
  for (const char* c : {"ca_label", "moca", "cogstat", "effective_days"}) {
    cols.emplace_back(c);
  }
  return cols;
}();

/// features.csv with six-decimal floats.
void write_features(std::ostream& out, std::span<const LifeSpaceVector> vectors);
csv::ParseResult<LifeSpaceVector> read_features(std::istream& in);

}  // namespace tripscope::lifespace
