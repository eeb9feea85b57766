#pragma once

#include "guicheck/geometry.hpp"
#include "guicheck/selector.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace guicheck {

enum class NodeState { Visible, Enabled, Focused, Selected };
enum class NodeAction { Click, Focus, SetText, Select };

std::string_view to_string(NodeState s);
std::string_view to_string(NodeAction a);
NodeState node_state_from(std::string_view token);    // throws SyntaxError
NodeAction node_action_from(std::string_view token);  // throws SyntaxError

struct AccessibilityNode {
  std::string node_id;
  std::string role;
  std::string name;
  Bounds bounds;
  std::set<NodeState> states;
  std::set<NodeAction> actions;
  /// Text content for editable or selectable widgets.
  std::optional<std::string> value;
  std::vector<AccessibilityNode> children;

  bool has(NodeState s) const { return states.contains(s); }
  bool has(NodeAction a) const { return actions.contains(a); }

  friend bool operator==(const AccessibilityNode&, const AccessibilityNode&) = default;
};

struct FindResult {
  const AccessibilityNode* node = nullptr;
  bool fallback_used = false;
};

/// nth pre-order match of the selector. Exact names are tried first; only
/// when fewer than nth+1 exact matches exist does the normalized comparison
/// apply. Throws NotFound.
FindResult find(const AccessibilityNode& tree, const Selector& sel);

/// Pre-order lookup by node id; nullptr when absent.
const AccessibilityNode* find_by_id(const AccessibilityNode& tree, std::string_view node_id);

/// One line per node, indented by depth. Used in logs and agent observations.
std::string dump_tree(const AccessibilityNode& tree);

}  // namespace guicheck
