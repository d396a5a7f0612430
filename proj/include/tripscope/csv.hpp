// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tripscope/common.hpp"

namespace tripscope::csv {

/// Raised when the header row is missing or does not match the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A malformed data row. Line numbers are 1-based and count the header.
struct RowError {
  std::size_t line;
  std::string message;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::vector<RowError> errors;
};

struct Row {
  std::size_t line;
  std::vector<std::string> fields;
};

/// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> split_line(std::string_view line);

/// Reads the header and every non-blank data row. The header must equal
/// `expected` exactly (after trimming a trailing CR and surrounding spaces).
std::vector<Row> read_table(std::istream& in,
                            const std::vector<std::string>& expected);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Fixed-point formatting with `decimals` digits; never prints "-0".
std::string format_fixed(double value, int decimals = 6);

std::string join(const std::vector<std::string>& fields);

}  // namespace tripscope::csv
