#include "guicheck/accessibility.hpp"

#include "guicheck/error.hpp"

#include <array>
#include <functional>
#include <sstream>

namespace guicheck {

namespace {

constexpr std::array<std::string_view, 4> kStateTokens = {"visible", "enabled", "focused", "selected"};
constexpr std::array<std::string_view, 4> kActionTokens = {"click", "focus", "set_text", "select"};

void collect(const AccessibilityNode& node, const Selector& sel, bool normalized,
             std::vector<const AccessibilityNode*>& out) {
  const bool role_ok = !sel.role || *sel.role == node.role;
  const NameMatch m = match_name(sel.name, node.name);
  const bool name_ok = normalized ? m != NameMatch::None : m == NameMatch::Exact;
  if (role_ok && name_ok) out.push_back(&node);
  for (const auto& child : node.children) collect(child, sel, normalized, out);
}

}  // namespace

std::string_view to_string(NodeState s) { return kStateTokens[static_cast<std::size_t>(s)]; }
std::string_view to_string(NodeAction a) { return kActionTokens[static_cast<std::size_t>(a)]; }

NodeState node_state_from(std::string_view token) {
  for (std::size_t i = 0; i < kStateTokens.size(); ++i) {
    if (kStateTokens[i] == token) return static_cast<NodeState>(i);
  }
  fail(ErrorCode::SyntaxError, "unknown widget state '" + std::string(token) + "'");
}

NodeAction node_action_from(std::string_view token) {
  for (std::size_t i = 0; i < kActionTokens.size(); ++i) {
    if (kActionTokens[i] == token) return static_cast<NodeAction>(i);
  }
  fail(ErrorCode::SyntaxError, "unknown widget action '" + std::string(token) + "'");
}

FindResult find(const AccessibilityNode& tree, const Selector& sel) {
  const auto index = static_cast<std::size_t>(sel.nth);
  std::vector<const AccessibilityNode*> matches;
  collect(tree, sel, false, matches);
  if (matches.size() > index) return {matches[index], false};

  matches.clear();
  collect(tree, sel, true, matches);
  if (matches.size() > index) return {matches[index], true};
  fail(ErrorCode::NotFound, "no element matches " + describe(sel));
}

const AccessibilityNode* find_by_id(const AccessibilityNode& tree, std::string_view node_id) {
  if (tree.node_id == node_id) return &tree;
  for (const auto& child : tree.children) {
    if (const auto* hit = find_by_id(child, node_id)) return hit;
  }
  return nullptr;
}

std::string dump_tree(const AccessibilityNode& tree) {
  std::ostringstream out;
  std::function<void(const AccessibilityNode&, int)> walk = [&](const AccessibilityNode& n, int depth) {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << n.role << " '" << n.name << "' [" << n.bounds.x
        << "," << n.bounds.y << "," << n.bounds.w << "," << n.bounds.h << "]";
    bool first = true;
    for (NodeState s : n.states) {
      out << (first ? " " : ",") << to_string(s);
      first = false;
    }
    if (n.value) out << " value=\"" << *n.value << "\"";
    out << "\n";
    for (const auto& c : n.children) walk(c, depth + 1);
  };
  walk(tree, 0);
  return out.str();
}

}  // namespace guicheck
