#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace misinfo {

// Credibility dichotomy over news outlets, propagated to posts.
enum class Label { Questionable, Reliable, Unknown };

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::Questionable: return "Questionable";
    case Label::Reliable: return "Reliable";
    case Label::Unknown: return "Unknown";
  }
  return "Unknown";
}

inline std::optional<Label> parse_label(std::string_view text) {
  if (text == "Questionable") return Label::Questionable;
  if (text == "Reliable") return Label::Reliable;
  if (text == "Unknown") return Label::Unknown;
  return std::nullopt;
}

inline Label swapped(Label label) {
  switch (label) {
    case Label::Questionable: return Label::Reliable;
    case Label::Reliable: return Label::Questionable;
    case Label::Unknown: return Label::Unknown;
  }
  return Label::Unknown;
}

inline bool is_categorized(Label label) { return label != Label::Unknown; }

// post_id -> label. Ordered so that every emitted artifact is deterministic.
using PostLabels = std::map<std::string, Label, std::less<>>;

}  // namespace misinfo
