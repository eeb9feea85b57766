#include "guicheck/selector.hpp"

#include <cctype>

namespace guicheck {

std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

NameMatch match_name(std::string_view wanted, std::string_view actual) {
  if (wanted == actual) return NameMatch::Exact;
  if (normalize_name(wanted) == normalize_name(actual)) return NameMatch::Fallback;
  return NameMatch::None;
}

std::string describe(const Selector& sel) {
  std::string out = "'" + sel.name + "'";
  if (sel.role) out = *sel.role + " " + out;
  if (sel.nth != 0) out += "#" + std::to_string(sel.nth);
  return out;
}

}  // namespace guicheck
