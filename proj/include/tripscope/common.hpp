// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tripscope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cognitive-ability class of a driver. MCI_AD is the positive class.
enum class CognitiveLabel { cu = 0, mci_ad = 1 };

inline constexpr std::string_view to_string(CognitiveLabel label) {
  return label == CognitiveLabel::mci_ad ? "MCI_AD" : "CU";
}

inline std::optional<CognitiveLabel> parse_label(std::string_view text) {
  if (text == "MCI_AD") return CognitiveLabel::mci_ad;
  if (text == "CU") return CognitiveLabel::cu;
  return std::nullopt;
}

}  // namespace tripscope
