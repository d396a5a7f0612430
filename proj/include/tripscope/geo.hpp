// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

#include "tripscope/common.hpp"

namespace tripscope::geo {

class InvalidPoint : public Error {
 public:
  using Error::Error;
};

class InvalidPrecision : public Error {
 public:
  using Error::Error;
};

class InvalidGeohash : public Error {
 public:
  using Error::Error;
};

inline constexpr int kMaxPrecision = 12;
inline constexpr double kEarthRadiusMiles = 3958.8;
inline constexpr std::string_view kBase32 = "0123456789bcdefghjkmnpqrstuvwxyz";

/// A latitude/longitude pair in degrees.
///
/// Latitude lies in [-90, 90]. Longitude lies in [-180, 180); an input of
/// exactly +180 is stored as -180 so every meridian has one representation.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon);

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

struct BoundingBox {
  double min_lat;
  double max_lat;
  double min_lon;
  double max_lon;

  /// Closed-interval containment on both axes.
  bool contains(const GeoPoint& p) const {
    return p.lat() >= min_lat && p.lat() <= max_lat && p.lon() >= min_lon &&
           p.lon() <= max_lon;
  }
  double lat_span() const { return max_lat - min_lat; }
  double lon_span() const { return max_lon - min_lon; }
};

/// A validated geohash string. Lower-case Base32 only.
class Geohash {
 public:
  explicit Geohash(std::string code);

  const std::string& code() const { return code_; }
  int precision() const { return static_cast<int>(code_.size()); }
  bool starts_with(const Geohash& prefix) const {
    return code_.starts_with(prefix.code_);
  }

  friend auto operator<=>(const Geohash&, const Geohash&) = default;
  friend bool operator==(const Geohash&, const Geohash&) = default;

 private:
  std::string code_;
};

/// Standard geohash: alternate longitude/latitude bisection starting with
/// longitude, five bits per character. Points on a bisection midpoint go to
/// the upper half. Throws InvalidPrecision outside [1, kMaxPrecision].
Geohash encode(const GeoPoint& p, int precision);

/// Convenience overload; throws InvalidPoint for out-of-range or non-finite
/// coordinates.
Geohash encode(double lat, double lon, int precision);

/// Exact cell of a geohash.
BoundingBox decode_bbox(const Geohash& g);

/// Midpoint of the geohash cell on both axes.
GeoPoint center(const Geohash& g);

/// Great-circle distance in statute miles on a sphere of radius
/// kEarthRadiusMiles.
double haversine_miles(const GeoPoint& a, const GeoPoint& b);

}  // namespace tripscope::geo

template <>
struct std::hash<tripscope::geo::Geohash> {
  std::size_t operator()(const tripscope::geo::Geohash& g) const noexcept {
    return std::hash<std::string>{}(g.code());
  }
};
