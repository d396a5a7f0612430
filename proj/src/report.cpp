// SPDX-License-Identifier: Apache-2.0

#include "tripscope/report.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tripscope/csv.hpp"

namespace tripscope::report {
namespace {

constexpr double kPanel = 420;
constexpr double kRadius = 150;

std::string num(double v) { return csv::format_fixed(v, 2); }

}  // namespace

std::vector<ClassSummaryRow> class_summary(std::span<const lifespace::LifeSpaceVector> vectors) {
  std::vector<ClassSummaryRow> rows;
  for (auto label : {CognitiveLabel::mci_ad, CognitiveLabel::cu}) {
    std::vector<const lifespace::LifeSpaceVector*> members;
    for (const auto& v : vectors) {
      if (v.ca_label == label) members.push_back(&v);
    }
    if (members.empty()) continue;
    for (int f = 0; f < lifespace::kFeatureCount; ++f) {
      ClassSummaryRow row;
      row.label = label;
      row.variable = std::string(lifespace::kFeatureNames[f]);
      row.n = members.size();
      for (const auto* v : members) row.mean += v->features[f];
      row.mean /= static_cast<double>(row.n);
      if (row.n > 1) {
        double ss = 0;
        for (const auto* v : members) ss += (v->features[f] - row.mean) * (v->features[f] - row.mean);
        row.sd = std::sqrt(ss / static_cast<double>(row.n - 1));
      } else {
        row.sd_defined = false;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_class_summary(std::ostream& out, std::span<const ClassSummaryRow> rows) {
  out << "ca_label,variable,mean,sd,n,sd_defined\n";
  for (const auto& r : rows) {
    out << to_string(r.label) << ',' << r.variable << ',' << csv::format_fixed(r.mean, 6) << ','
        << csv::format_fixed(r.sd, 6) << ',' << r.n << ',' << (r.sd_defined ? 1 : 0) << '\n';
  }
}

std::string radial_svg(std::span<const ClassSummaryRow> rows) {
  double axis_max = 0;
  for (const auto& r : rows) axis_max = std::max(axis_max, r.mean);
  axis_max = axis_max > 0 ? axis_max * 1.1 : 1.0;

  std::vector<CognitiveLabel> classes;
  for (const auto& r : rows) {
    if (std::find(classes.begin(), classes.end(), r.label) == classes.end()) {
      classes.push_back(r.label);
    }
  }
  const double width = kPanel * static_cast<double>(std::max<std::size_t>(classes.size(), 1));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(kPanel) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(kPanel)
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const int n = lifespace::kFeatureCount;
  auto angle = [&](int f) { return -std::numbers::pi / 2 + 2 * std::numbers::pi * f / n; };
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double cx = kPanel * (static_cast<double>(c) + 0.5);
    const double cy = kPanel / 2 + 10;
    const bool mci = classes[c] == CognitiveLabel::mci_ad;
    svg << "<g id=\"" << to_string(classes[c]) << "\">\n";
    svg << "<text x=\"" << num(cx) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << (mci ? "MCI/AD" : "Cognitively unimpaired") << "</text>\n";
    for (int ring = 1; ring <= 4; ++ring) {
      svg << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
          << num(kRadius * ring / 4) << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    }
    std::string points;
    for (int f = 0; f < n; ++f) {
      const double a = angle(f);
      const double ex = cx + kRadius * std::cos(a);
      const double ey = cy + kRadius * std::sin(a);
      svg << "<line x1=\"" << num(cx) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(ex)
          << "\" y2=\"" << num(ey) << "\" stroke=\"#999999\"/>\n";
      const double lx = cx + (kRadius + 22) * std::cos(a);
      const double ly = cy + (kRadius + 22) * std::sin(a);
      svg << "<text x=\"" << num(lx) << "\" y=\"" << num(ly)
          << "\" text-anchor=\"middle\">" << lifespace::kFeatureNames[f] << "</text>\n";
      double mean = 0;
      for (const auto& r : rows) {
        if (r.label == classes[c] && r.variable == lifespace::kFeatureNames[f]) mean = r.mean;
      }
      const double rr = kRadius * mean / axis_max;
      if (!points.empty()) points += ' ';
      points += num(cx + rr * std::cos(a)) + "," + num(cy + rr * std::sin(a));
    }
    svg << "<polygon points=\"" << points << "\" fill=\"" << (mci ? "#d62728" : "#1f77b4")
        << "\" fill-opacity=\"0.35\" stroke=\"" << (mci ? "#d62728" : "#1f77b4") << "\"/>\n";
    svg << "<text x=\"" << num(cx) << "\" y=\"" << num(kPanel - 8)
        << "\" text-anchor=\"middle\">axis max " << num(axis_max) << " trips/100 days</text>\n";
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tripscope::report
