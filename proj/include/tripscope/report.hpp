// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tripscope/lifespace.hpp"

namespace tripscope::report {

struct ClassSummaryRow {
  CognitiveLabel label = CognitiveLabel::mci_ad;
  std::string variable;
  double mean = 0;
  double sd = 0;
  std::size_t n = 0;
  /// False when the class has a single driver (sd reported as 0).
  bool sd_defined = true;
};

/// Mean and n-1 SD of every variable per class, MCI_AD block first.
/// Drivers without a label are ignored.
std::vector<ClassSummaryRow> class_summary(std::span<const lifespace::LifeSpaceVector> vectors);

/// class_summary.csv: ca_label, variable, mean, sd, n, sd_defined.
void write_class_summary(std::ostream& out, std::span<const ClassSummaryRow> rows);

/// One radial plot per class over the twelve variables, sharing an axis
/// maximum of 1.1 x the largest class mean.
std::string radial_svg(std::span<const ClassSummaryRow> rows);

}  // namespace tripscope::report
