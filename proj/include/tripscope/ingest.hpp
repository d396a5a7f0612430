// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <absl/time/time.h>

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tripscope/common.hpp"
#include "tripscope/csv.hpp"
#include "tripscope/geo.hpp"

namespace tripscope::ingest {

/// No kept drives and no declared study length for a driver.
class ExposureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// One ignition-on to ignition-off drive.
struct DriveRecord {
  std::string driver_id;
  std::string drive_id;
  absl::Time start_time;
  absl::Time end_time;
  std::optional<geo::GeoPoint> start;
  std::optional<geo::GeoPoint> end;
  bool self_driven = true;
  bool maintenance = false;

  bool complete() const { return start.has_value() && end.has_value(); }
};

struct DriverProfile {
  std::string driver_id;
  std::optional<CognitiveLabel> ca_label;
  std::optional<int> moca;
  std::optional<double> cogstat;
  std::optional<int> days_in_study;
};

struct RuleCounts {
  std::size_t incomplete = 0;
  std::size_t not_self_or_maintenance = 0;
  std::size_t short_drive = 0;
  std::size_t out_of_state = 0;
  std::size_t kept = 0;

  std::size_t removed() const {
    return incomplete + not_self_or_maintenance + short_drive + out_of_state;
  }
  std::size_t total() const { return removed() + kept; }
};

struct RemovalReport {
  RuleCounts totals;
  std::map<std::string, RuleCounts> per_driver;

  /// {"total", "kept", "incomplete", "not_self_or_maintenance",
  ///  "short_drive", "out_of_state", "per_driver": {...}} as compact JSON.
  std::string to_json() const;
};

struct PreprocessConfig {
  /// Nebraska by default.
  geo::BoundingBox state_box{40.0, 43.0, -104.06, -95.31};
  double min_distance_miles = 0.2;
};

enum class Removal { kept, incomplete, not_self_or_maintenance, short_drive, out_of_state };

inline const std::vector<std::string> kDriveColumns{
    "driver_id", "drive_id", "start_time", "end_time", "start_lat",
    "start_lon", "end_lat",  "end_lon",    "self_driven", "maintenance"};

inline const std::vector<std::string> kCohortColumns{
    "driver_id", "ca_label", "moca", "cogstat", "days_in_study"};

/// ISO-8601 timestamp with an explicit offset ("Z" or "+hh:mm").
std::optional<absl::Time> parse_timestamp(std::string_view text);
std::string format_timestamp(absl::Time t, const absl::TimeZone& tz);

/// Loads an IANA zone; throws ConfigError for unknown names.
absl::TimeZone load_timezone(const std::string& name);

csv::ParseResult<DriveRecord> parse_drives(std::istream& in);
csv::ParseResult<DriverProfile> parse_cohort(std::istream& in);

void write_drives(std::ostream& out, std::span<const DriveRecord> drives,
                  const absl::TimeZone& tz);

/// The first rule a drive violates, in order: incomplete, not self-driven or
/// maintenance, short, ending outside the state box.
Removal classify(const DriveRecord& drive, const PreprocessConfig& cfg);

struct PreprocessResult {
  std::vector<DriveRecord> kept;
  RemovalReport report;
};

PreprocessResult preprocess(std::span<const DriveRecord> drives,
                            const PreprocessConfig& cfg = {});

/// Study exposure in days: the declared study length when present, else the
/// inclusive span of local calendar dates over the driver's drive end times.
int effective_days(std::span<const DriveRecord> driver_drives,
                   const DriverProfile& profile, const absl::TimeZone& tz);

}  // namespace tripscope::ingest
