// SPDX-License-Identifier: Apache-2.0

#include "tripscope/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace tripscope::geo {
namespace {

constexpr std::array<int, 128> make_decode_table() {
  std::array<int, 128> table{};
  table.fill(-1);
  for (std::size_t i = 0; i < kBase32.size(); ++i) {
    table[static_cast<unsigned char>(kBase32[i])] = static_cast<int>(i);
  }
  return table;
}

constexpr auto kDecode = make_decode_table();

int char_value(char c) {
  const auto uc = static_cast<unsigned char>(c);
  return uc < kDecode.size() ? kDecode[uc] : -1;
}

double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InvalidPoint("non-finite coordinate");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw InvalidPoint("latitude out of range: " + std::to_string(lat));
  }
  if (lon < -180.0 || lon > 180.0) {
    throw InvalidPoint("longitude out of range: " + std::to_string(lon));
  }
  if (lon_ == 180.0) lon_ = -180.0;
}

Geohash::Geohash(std::string code) : code_(std::move(code)) {
  if (code_.empty()) throw InvalidGeohash("empty geohash");
  if (code_.size() > static_cast<std::size_t>(kMaxPrecision)) {
    throw InvalidGeohash("geohash longer than " +
                         std::to_string(kMaxPrecision) + ": " + code_);
  }
  for (char c : code_) {
    if (char_value(c) < 0) {
      throw InvalidGeohash("illegal geohash character '" + std::string(1, c) +
                           "' in " + code_);
    }
  }
}

Geohash encode(const GeoPoint& p, int precision) {
  if (precision < 1 || precision > kMaxPrecision) {
    throw InvalidPrecision("geohash precision must be in [1, " +
                           std::to_string(kMaxPrecision) +
                           "], got " + std::to_string(precision));
  }
  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  bool lon_turn = true;
  std::string code;
  code.reserve(static_cast<std::size_t>(precision));
  for (int i = 0; i < precision; ++i) {
    int index = 0;
    for (int bit = 0; bit < 5; ++bit) {
      index <<= 1;
      if (lon_turn) {
        const double mid = (lon_lo + lon_hi) / 2;
        if (p.lon() >= mid) {
          index |= 1;
          lon_lo = mid;
        } else {
          lon_hi = mid;
        }
      } else {
        const double mid = (lat_lo + lat_hi) / 2;
        if (p.lat() >= mid) {
          index |= 1;
          lat_lo = mid;
        } else {
          lat_hi = mid;
        }
      }
      lon_turn = !lon_turn;
    }
    code.push_back(kBase32[static_cast<std::size_t>(index)]);
  }
  return Geohash(std::move(code));
}

Geohash encode(double lat, double lon, int precision) {
  return encode(GeoPoint(lat, lon), precision);
}

BoundingBox decode_bbox(const Geohash& g) {
  BoundingBox box{-90.0, 90.0, -180.0, 180.0};
  bool lon_turn = true;
  for (char c : g.code()) {
    const int value = char_value(c);
    for (int bit = 4; bit >= 0; --bit) {
      const bool upper = (value >> bit) & 1;
      if (lon_turn) {
        const double mid = (box.min_lon + box.max_lon) / 2;
        (upper ? box.min_lon : box.max_lon) = mid;
      } else {
        const double mid = (box.min_lat + box.max_lat) / 2;
        (upper ? box.min_lat : box.max_lat) = mid;
      }
      lon_turn = !lon_turn;
    }
  }
  return box;
}

GeoPoint center(const Geohash& g) {
  const BoundingBox box = decode_bbox(g);
  return GeoPoint((box.min_lat + box.max_lat) / 2,
                  (box.min_lon + box.max_lon) / 2);
}

double haversine_miles(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = to_radians(b.lat() - a.lat());
  const double dlon = to_radians(b.lon() - a.lon());
  const double s_lat = std::sin(dlat / 2);
  const double s_lon = std::sin(dlon / 2);
  double h = s_lat * s_lat + std::cos(to_radians(a.lat())) *
                                 std::cos(to_radians(b.lat())) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(h));
}

}  // namespace tripscope::geo
