// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tripscope/common.hpp"
#include "tripscope/lifespace.hpp"

namespace tripscope::synthcohort {

class SpecError : public Error {
 public:
  using Error::Error;
};

using Rates = std::array<double, lifespace::kFeatureCount>;

/// Class means in trips per 100 days, in lifespace::kFeatureNames order.
inline constexpr Rates kMciMeans{80.61, 24.96, 2.29, 0.59, 79.61, 20.44,
                                 12.26, 2.07,  52.30, 15.82, 27.58, 8.69};
inline constexpr Rates kMciSds{48.87, 18.58, 9.42, 2.64, 38.95, 14.82,
                               12.92, 5.42,  35.89, 14.32, 40.87, 12.8};
inline constexpr Rates kCuMeans{74.86, 22.18, 2.13, 0.58, 81.02, 20.89,
                                9.05,  0.75,  54.22, 17.48, 28.52, 9.71};
inline constexpr Rates kCuSds{43.51, 15.87, 5.57, 2.91, 39.43, 19.91,
                              7.77,  1.50,  29.90, 13.97, 36.63, 12.52};

struct CohortSpec {
  int n_mci = 60;
  int n_cu = 90;
  /// Study length in days; also written as days_in_study.
  int days = 90;
  Rates mci_rates = kMciMeans;
  Rates cu_rates = kCuMeans;
  Rates mci_sds = kMciSds;
  Rates cu_sds = kCuSds;
  /// MCI rate = CU rate + effect_scale * (MCI rate - CU rate), floored at 0.
  double effect_scale = 1.0;
  /// Gamma-mixed Poisson counts using the class SDs.
  bool overdispersed = false;
  /// Survey each driver's social location inside the work cell.
  bool collide_work_social = false;
  /// Extra drives, per counted trip, that violate one preprocessing rule.
  double noise_fraction = 0.02;
  /// Share of unknown trips that end at the surveyed `other` location.
  double other_share = 0.2;
  std::string start_date = "2019-03-04";
  std::string timezone = "America/Chicago";
  int precision = lifespace::kDefaultPrecision;
  std::uint64_t seed = 1;

  /// Throws SpecError for negative counts, rates, or scales.
  void validate() const;
  Rates rates_for(CognitiveLabel label) const;
};

struct SyntheticCohort {
  std::string drives_csv;
  std::string locations_csv;
  std::string cohort_csv;
  std::vector<std::string> warnings;
};

/// Deterministic for a given spec (including its seed).
SyntheticCohort generate(const CohortSpec& spec);

}  // namespace tripscope::synthcohort
