// SPDX-License-Identifier: Apache-2.0

#include "tripscope/ingest.hpp"

#include <absl/time/civil_time.h>

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace tripscope::ingest {
namespace {

constexpr const char* kTimeFormat = "%Y-%m-%dT%H:%M:%E*S%Ez";

std::optional<bool> parse_flag(std::string_view text) {
  if (text == "1") return true;
  if (text == "0") return false;
  return std::nullopt;
}

// Both fields empty means "not recorded"; anything else must be a valid point.
std::optional<geo::GeoPoint> parse_point(const std::string& lat,
                                         const std::string& lon,
                                         std::string& error) {
  if (lat.empty() || lon.empty()) return std::nullopt;
  const auto la = csv::parse_double(lat);
  const auto lo = csv::parse_double(lon);
  if (!la || !lo) {
    error = "non-numeric coordinate '" + lat + "," + lon + "'";
    return std::nullopt;
  }
  try {
    return geo::GeoPoint(*la, *lo);
  } catch (const geo::InvalidPoint& e) {
    error = e.what();
    return std::nullopt;
  }
}

nlohmann::ordered_json counts_json(const RuleCounts& c) {
  nlohmann::ordered_json j;
  j["total"] = c.total();
  j["kept"] = c.kept;
  j["incomplete"] = c.incomplete;
  j["not_self_or_maintenance"] = c.not_self_or_maintenance;
  j["short_drive"] = c.short_drive;
  j["out_of_state"] = c.out_of_state;
  return j;
}

}  // namespace

std::string RemovalReport::to_json() const {
  nlohmann::ordered_json j = counts_json(totals);
  nlohmann::ordered_json drivers = nlohmann::ordered_json::object();
  for (const auto& [id, counts] : per_driver) drivers[id] = counts_json(counts);
  j["per_driver"] = std::move(drivers);
  return j.dump(2) + "\n";
}

std::optional<absl::Time> parse_timestamp(std::string_view text) {
  absl::Time t;
  std::string err;
  if (!absl::ParseTime(kTimeFormat, std::string(text), &t, &err)) {
    return std::nullopt;
  }
  return t;
}

std::string format_timestamp(absl::Time t, const absl::TimeZone& tz) {
  return absl::FormatTime(kTimeFormat, t, tz);
}

absl::TimeZone load_timezone(const std::string& name) {
  absl::TimeZone tz;
  if (!absl::LoadTimeZone(name, &tz)) {
    throw ConfigError("unknown time zone: " + name);
  }
  return tz;
}

csv::ParseResult<DriveRecord> parse_drives(std::istream& in) {
  csv::ParseResult<DriveRecord> result;
  for (const auto& row : csv::read_table(in, kDriveColumns)) {
    const auto& f = row.fields;
    auto fail = [&](std::string msg) {
      result.errors.push_back({row.line, std::move(msg)});
    };
    if (f.size() != kDriveColumns.size()) {
      fail("expected " + std::to_string(kDriveColumns.size()) + " fields, got " +
           std::to_string(f.size()));
      continue;
    }
    DriveRecord d;
    d.driver_id = f[0];
    d.drive_id = f[1];
    if (d.driver_id.empty() || d.drive_id.empty()) {
      fail("empty driver_id or drive_id");
      continue;
    }
    const auto start_time = parse_timestamp(f[2]);
    const auto end_time = parse_timestamp(f[3]);
    if (!start_time || !end_time) {
      fail("unparseable timestamp");
      continue;
    }
    if (*end_time < *start_time) {
      fail("end_time precedes start_time");
      continue;
    }
    d.start_time = *start_time;
    d.end_time = *end_time;
    std::string error;
    d.start = parse_point(f[4], f[5], error);
    if (error.empty()) d.end = parse_point(f[6], f[7], error);
    if (!error.empty()) {
      fail(error);
      continue;
    }
    const auto self = parse_flag(f[8]);
    const auto maint = parse_flag(f[9]);
    if (!self || !maint) {
      fail("self_driven and maintenance must be 0 or 1");
      continue;
    }
    d.self_driven = *self;
    d.maintenance = *maint;
    result.records.push_back(std::move(d));
  }
  return result;
}

csv::ParseResult<DriverProfile> parse_cohort(std::istream& in) {
  csv::ParseResult<DriverProfile> result;
  for (const auto& row : csv::read_table(in, kCohortColumns)) {
    const auto& f = row.fields;
    auto fail = [&](std::string msg) {
      result.errors.push_back({row.line, std::move(msg)});
    };
    if (f.size() != kCohortColumns.size()) {
      fail("expected " + std::to_string(kCohortColumns.size()) + " fields, got " +
           std::to_string(f.size()));
      continue;
    }
    DriverProfile p;
    p.driver_id = f[0];
    if (p.driver_id.empty()) {
      fail("empty driver_id");
      continue;
    }
    if (!f[1].empty()) {
      p.ca_label = parse_label(f[1]);
      if (!p.ca_label) {
        fail("ca_label must be MCI_AD or CU, got '" + f[1] + "'");
        continue;
      }
    }
    if (!f[2].empty()) {
      const auto moca = csv::parse_int(f[2]);
      if (!moca || *moca < 0 || *moca > 30) {
        fail("moca must be an integer in [0, 30]");
        continue;
      }
      p.moca = static_cast<int>(*moca);
    }
    if (!f[3].empty()) {
      p.cogstat = csv::parse_double(f[3]);
      if (!p.cogstat) {
        fail("cogstat is not a number");
        continue;
      }
    }
    if (!f[4].empty()) {
      const auto days = csv::parse_int(f[4]);
      if (!days || *days < 1) {
        fail("days_in_study must be a positive integer");
        continue;
      }
      p.days_in_study = static_cast<int>(*days);
    }
    result.records.push_back(std::move(p));
  }
  return result;
}

void write_drives(std::ostream& out, std::span<const DriveRecord> drives,
                  const absl::TimeZone& tz) {
  out << csv::join(kDriveColumns) << '\n';
  auto coord = [](const std::optional<geo::GeoPoint>& p, bool lat) {
    if (!p) return std::string();
    return csv::format_fixed(lat ? p->lat() : p->lon(), 6);
  };
  for (const auto& d : drives) {
    out << d.driver_id << ',' << d.drive_id << ','
        << format_timestamp(d.start_time, tz) << ','
        << format_timestamp(d.end_time, tz) << ',' << coord(d.start, true) << ','
        << coord(d.start, false) << ',' << coord(d.end, true) << ','
        << coord(d.end, false) << ',' << (d.self_driven ? 1 : 0) << ','
        << (d.maintenance ? 1 : 0) << '\n';
  }
}

Removal classify(const DriveRecord& drive, const PreprocessConfig& cfg) {
  if (!drive.complete()) return Removal::incomplete;
  if (!drive.self_driven || drive.maintenance) {
    return Removal::not_self_or_maintenance;
  }
  if (geo::haversine_miles(*drive.start, *drive.end) < cfg.min_distance_miles) {
    return Removal::short_drive;
  }
  if (!cfg.state_box.contains(*drive.end)) return Removal::out_of_state;
  return Removal::kept;
}

PreprocessResult preprocess(std::span<const DriveRecord> drives,
                            const PreprocessConfig& cfg) {
  PreprocessResult result;
  for (const auto& d : drives) {
    RuleCounts& mine = result.report.per_driver[d.driver_id];
    auto bump = [&](std::size_t RuleCounts::*field) {
      ++(result.report.totals.*field);
      ++(mine.*field);
    };
    switch (classify(d, cfg)) {
      case Removal::incomplete: bump(&RuleCounts::incomplete); break;
      case Removal::not_self_or_maintenance:
        bump(&RuleCounts::not_self_or_maintenance);
        break;
      case Removal::short_drive: bump(&RuleCounts::short_drive); break;
      case Removal::out_of_state: bump(&RuleCounts::out_of_state); break;
      case Removal::kept:
        bump(&RuleCounts::kept);
        result.kept.push_back(d);
        break;
    }
  }
  return result;
}

int effective_days(std::span<const DriveRecord> driver_drives,
                   const DriverProfile& profile, const absl::TimeZone& tz) {
  if (profile.days_in_study) return *profile.days_in_study;
  if (driver_drives.empty()) {
    throw ExposureError("driver " + profile.driver_id +
                        " has no drives and no days_in_study");
  }
  auto [first, last] = std::minmax_element(
      driver_drives.begin(), driver_drives.end(),
      [](const DriveRecord& a, const DriveRecord& b) { return a.end_time < b.end_time; });
  const absl::CivilDay d0 = absl::ToCivilDay(first->end_time, tz);
  const absl::CivilDay d1 = absl::ToCivilDay(last->end_time, tz);
  return static_cast<int>(d1 - d0) + 1;
}

}  // namespace tripscope::ingest
