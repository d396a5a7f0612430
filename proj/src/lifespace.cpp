// SPDX-License-Identifier: Apache-2.0

#include "tripscope/lifespace.hpp"

#include <absl/time/civil_time.h>

#include <cmath>

namespace tripscope::lifespace {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames{
    "home", "work",   "doctor",   "groceries", "prescriptions",
    "gas",  "social", "exercise", "religion",  "other"};

int counted(const CategoryCounts& c, Category cat, int day_type) {
  return c.at(cat, day_type);
}

}  // namespace

std::string_view to_string(Category c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

std::optional<Category> parse_category(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == text) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::set<Category> LocationBook::match(const geo::Geohash& cell) const {
  std::set<Category> out;
  for (const auto& [category, cells] : entries) {
    if (cells.contains(cell)) out.insert(category);
  }
  return out;
}

csv::ParseResult<SurveyRow> parse_locations(std::istream& in) {
  csv::ParseResult<SurveyRow> result;
  for (const auto& row : csv::read_table(in, kLocationColumns)) {
    const auto& f = row.fields;
    if (f.size() != kLocationColumns.size()) {
      result.errors.push_back({row.line, "expected 4 fields, got " +
                                             std::to_string(f.size())});
      continue;
    }
    const auto lat = csv::parse_double(f[2]);
    const auto lon = csv::parse_double(f[3]);
    if (f[0].empty() || !lat || !lon) {
      result.errors.push_back({row.line, "missing driver_id or coordinates"});
      continue;
    }
    result.records.push_back({row.line, f[0], f[1], *lat, *lon});
  }
  return result;
}

csv::ParseResult<LocationBook> build_location_books(std::span<const SurveyRow> rows,
                                                    int precision) {
  std::map<std::string, LocationBook> books;
  csv::ParseResult<LocationBook> result;
  for (const auto& row : rows) {
    const auto category = parse_category(row.category);
    if (!category) {
      result.errors.push_back({row.line, "unknown category '" + row.category + "'"});
      continue;
    }
    geo::Geohash cell("0");
    try {
      cell = geo::encode(row.lat, row.lon, precision);
    } catch (const geo::InvalidPoint& e) {
      result.errors.push_back({row.line, e.what()});
      continue;
    }
    LocationBook& book = books[row.driver_id];
    book.driver_id = row.driver_id;
    book.precision = precision;
    book.entries[*category].insert(std::move(cell));
  }
  for (auto& [id, book] : books) result.records.push_back(std::move(book));
  return result;
}

TripLabel label_trip(const ingest::DriveRecord& drive, const LocationBook& book) {
  if (!drive.end) {
    throw PreconditionError("drive " + drive.drive_id + " has no end point");
  }
  TripLabel label{drive.driver_id, drive.drive_id,
                  geo::encode(*drive.end, book.precision), {}, Disposition::unknown};
  label.matched = book.match(label.end_cell);
  if (label.matched.size() == 1) {
    label.disposition = Disposition::single;
  } else if (label.matched.size() >= 2) {
    label.disposition = Disposition::multi_label_excluded;
  }
  return label;
}

csv::ParseResult<Relabel> parse_relabels(std::istream& in) {
  csv::ParseResult<Relabel> result;
  std::map<std::pair<std::string, std::string>, std::string> seen;
  for (const auto& row : csv::read_table(in, kRelabelColumns)) {
    const auto& f = row.fields;
    if (f.size() != kRelabelColumns.size() || f[0].empty()) {
      result.errors.push_back({row.line, "expected driver_id,geohash,new_category"});
      continue;
    }
    std::optional<Category> target;
    if (f[2] != "unknown") {
      target = parse_category(f[2]);
      if (!target || *target == Category::home || *target == Category::work ||
          *target == Category::other) {
        throw ConfigError("line " + std::to_string(row.line) +
                          ": relabel target '" + f[2] + "' is not allowed");
      }
    }
    std::optional<geo::Geohash> cell;
    try {
      cell.emplace(f[1]);
    } catch (const geo::InvalidGeohash& e) {
      result.errors.push_back({row.line, e.what()});
      continue;
    }
    const auto key = std::make_pair(f[0], f[1]);
    if (auto it = seen.find(key); it != seen.end()) {
      if (it->second != f[2]) {
        throw ConfigError("line " + std::to_string(row.line) +
                          ": conflicting relabels for " + f[0] + "/" + f[1]);
      }
      continue;
    }
    seen.emplace(key, f[2]);
    result.records.push_back({f[0], std::move(*cell), target});
  }
  return result;
}

RelabelTable::RelabelTable(std::span<const Relabel> rows) {
  for (const auto& row : rows) {
    if (row.category == Category::home || row.category == Category::work ||
        row.category == Category::other) {
      throw ConfigError("relabel target '" + std::string(to_string(*row.category)) +
                        "' is not allowed");
    }
    rows_.insert_or_assign({row.driver_id, row.cell}, row);
  }
}

const Relabel* RelabelTable::find(const std::string& driver_id,
                                  const geo::Geohash& cell) const {
  const auto it = rows_.find({driver_id, cell});
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<TripLabel> apply_relabels(std::span<const TripLabel> labels,
                                      const RelabelTable& table) {
  std::vector<TripLabel> out(labels.begin(), labels.end());
  for (auto& label : out) {
    const bool eligible = label.disposition == Disposition::unknown ||
                          label.category() == Category::other;
    if (!eligible) continue;
    const Relabel* row = table.find(label.driver_id, label.end_cell);
    if (!row) continue;
    if (row->category) {
      label.matched = {*row->category};
      label.disposition = Disposition::single;
    } else {
      label.matched.clear();
      label.disposition = Disposition::unknown;
    }
  }
  return out;
}

int CategoryCounts::total() const {
  int sum = 0;
  for (const auto& row : nd) sum += row[0] + row[1];
  return sum;
}

bool is_weekday(absl::Time t, const absl::TimeZone& tz) {
  const auto day = absl::GetWeekday(absl::ToCivilDay(t, tz));
  return day != absl::Weekday::saturday && day != absl::Weekday::sunday;
}

CategoryCounts count_categories(std::span<const TripLabel> labels,
                                std::span<const ingest::DriveRecord> drives,
                                const absl::TimeZone& tz) {
  if (labels.size() != drives.size()) {
    throw PreconditionError("labels and drives differ in length");
  }
  CategoryCounts counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const TripLabel& label = labels[i];
    if (label.drive_id != drives[i].drive_id) {
      throw PreconditionError("label " + label.drive_id + " is not aligned with drive " +
                              drives[i].drive_id);
    }
    if (counts.driver_id.empty()) counts.driver_id = label.driver_id;
    const int w = is_weekday(drives[i].end_time, tz) ? kWeekday : kWeekend;
    switch (label.disposition) {
      case Disposition::single:
        ++counts.nd[static_cast<std::size_t>(*label.category())][w];
        break;
      case Disposition::unknown:
        ++counts.nd[kUnknownIndex][w];
        break;
      case Disposition::multi_label_excluded:
        ++counts.multi_label_excluded;
        break;
    }
  }
  return counts;
}

int LifeSpaceVector::total_trips() const {
  int sum = 0;
  for (int c : raw_counts) sum += c;
  return sum;
}

LifeSpaceVector compute_life_space(const CategoryCounts& counts, int effective_days) {
  if (effective_days < 1) {
    throw PreconditionError("effective_days must be >= 1");
  }
  LifeSpaceVector v;
  v.driver_id = counts.driver_id;
  v.effective_days = effective_days;
  for (int w : {kWeekday, kWeekend}) {
    const int slot = w == kWeekday ? 0 : 1;
    auto& raw = v.raw_counts;
    raw[home_wkd + slot] = counted(counts, Category::home, w);
    raw[work_wkd + slot] = counted(counts, Category::work, w);
    raw[errand_wkd + slot] = counted(counts, Category::groceries, w) +
                             counted(counts, Category::gas, w) +
                             counted(counts, Category::prescriptions, w);
    raw[medical_wkd + slot] = counted(counts, Category::doctor, w);
    raw[social_wkd + slot] = counted(counts, Category::social, w) +
                             counted(counts, Category::exercise, w) +
                             counted(counts, Category::religion, w);
    raw[unknown_wkd + slot] = counts.unknown(w) + counted(counts, Category::other, w);
  }
  for (int i = 0; i < kFeatureCount; ++i) {
    v.features[i] = 100.0 * v.raw_counts[i] / effective_days;
  }
  return v;
}

ExclusionResult exclude_low_activity(std::span<const LifeSpaceVector> vectors) {
  ExclusionResult result;
  for (const auto& v : vectors) {
    std::string reason;
    if (v.total_trips() < kMinTotalTrips) {
      reason = "low_activity";
    } else if (!v.ca_label) {
      reason = "missing_ca_label";
    } else if (!v.moca) {
      reason = "missing_moca";
    } else if (!v.cogstat) {
      reason = "missing_cogstat";
    }
    if (reason.empty()) {
      result.kept.push_back(v);
    } else {
      result.excluded.push_back({v.driver_id, reason});
    }
  }
  return result;
}

void write_features(std::ostream& out, std::span<const LifeSpaceVector> vectors) {
  out << csv::join(kFeatureFileColumns) << '\n';
  for (const auto& v : vectors) {
    out << v.driver_id;
    for (double f : v.features) out << ',' << csv::format_fixed(f, 6);
    out << ',' << (v.ca_label ? std::string(to_string(*v.ca_label)) : "");
    out << ',' << (v.moca ? std::to_string(*v.moca) : "");
    out << ',' << (v.cogstat ? csv::format_fixed(*v.cogstat, 6) : "");
    out << ',' << v.effective_days << '\n';
  }
}

csv::ParseResult<LifeSpaceVector> read_features(std::istream& in) {
  csv::ParseResult<LifeSpaceVector> result;
  for (const auto& row : csv::read_table(in, kFeatureFileColumns)) {
    const auto& f = row.fields;
    auto fail = [&](std::string msg) { result.errors.push_back({row.line, std::move(msg)}); };
    if (f.size() != kFeatureFileColumns.size() || f[0].empty()) {
      fail("wrong field count");
      continue;
    }
    LifeSpaceVector v;
    v.driver_id = f[0];
    const auto days = csv::parse_int(f[16]);
    if (!days || *days < 1) {
      fail("effective_days must be a positive integer");
      continue;
    }
    v.effective_days = static_cast<int>(*days);
    bool ok = true;
    for (int i = 0; i < kFeatureCount; ++i) {
      const auto value = csv::parse_double(f[1 + i]);
      if (!value || *value < 0) {
        ok = false;
        break;
      }
      v.features[i] = *value;
      v.raw_counts[i] = static_cast<int>(std::lround(*value * v.effective_days / 100.0));
    }
    if (!ok) {
      fail("feature values must be non-negative numbers");
      continue;
    }
    if (!f[13].empty() && !(v.ca_label = parse_label(f[13]))) {
      fail("bad ca_label '" + f[13] + "'");
      continue;
    }
    if (!f[14].empty()) {
      const auto moca = csv::parse_int(f[14]);
      if (!moca) {
        fail("bad moca");
        continue;
      }
      v.moca = static_cast<int>(*moca);
    }
    if (!f[15].empty() && !(v.cogstat = csv::parse_double(f[15]))) {
      fail("bad cogstat");
      continue;
    }
    result.records.push_back(std::move(v));
  }
  return result;
}

}  // namespace tripscope::lifespace
