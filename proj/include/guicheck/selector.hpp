#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace guicheck {

/// Reference to a widget by display name, optionally narrowed by role and
/// disambiguated by a 0-based index over pre-order matches.
struct Selector {
  std::optional<std::string> role;
  std::string name;
  int nth = 0;

  friend bool operator==(const Selector&, const Selector&) = default;
};

/// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string normalize_name(std::string_view name);

enum class NameMatch { None, Exact, Fallback };

NameMatch match_name(std::string_view wanted, std::string_view actual);

std::string describe(const Selector& sel);

}  // namespace guicheck
