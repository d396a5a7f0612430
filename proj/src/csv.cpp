// SPDX-License-Identifier: Apache-2.0

#include "tripscope/csv.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace tripscope::csv {

std::vector<std::string> split_line(std::string_view line) {
  using Separator = boost::escaped_list_separator<char>;
  const std::string text(line);
  boost::tokenizer<Separator> tokens(text, Separator('\\', ',', '"'));
  std::vector<std::string> fields;
  for (const auto& token : tokens) {
    fields.push_back(boost::algorithm::trim_copy(token));
  }
  return fields;
}

std::vector<Row> read_table(std::istream& in,
                            const std::vector<std::string>& expected) {
  if (!in) throw IoError("input stream is not readable");
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;
    have_header = true;
    break;
  }
  if (!have_header) throw SchemaError("missing header row");
  if (split_line(line) != expected) {
    std::string want;
    for (const auto& name : expected) want += (want.empty() ? "" : ",") + name;
    throw SchemaError("header mismatch on line " + std::to_string(line_no) +
                      ": expected '" + want + "'");
  }
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;
    try {
      rows.push_back({line_no, split_line(line)});
    } catch (const boost::escaped_list_error&) {
      rows.push_back({line_no, {}});
    }
  }
  if (in.bad()) throw IoError("read failure after line " + std::to_string(line_no));
  return rows;
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<long long> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out(buf);
  if (out.starts_with('-') && out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += fields[i];
  }
  return out;
}

}  // namespace tripscope::csv
