#include "doctest.h"

#include "guicheck/accessibility.hpp"
#include "guicheck/error.hpp"

using namespace guicheck;

namespace {

AccessibilityNode leaf(std::string id, std::string role, std::string name) {
  AccessibilityNode n;
  n.node_id = std::move(id);
  n.role = std::move(role);
  n.name = std::move(name);
  return n;
}

AccessibilityNode sample() {
  AccessibilityNode root = leaf("0", "window", "main");
  AccessibilityNode panel = leaf("1", "panel", "tools");
  panel.children.push_back(leaf("2", "push button", "Save"));
  panel.children.push_back(leaf("3", "push button", "save"));
  root.children.push_back(panel);
  root.children.push_back(leaf("4", "push button", "Save"));
  root.children.push_back(leaf("5", "label", "Save"));
  return root;
}

}  // namespace

TEST_CASE("find walks in pre-order and honours nth") {
  const auto tree = sample();
  CHECK(find(tree, {std::nullopt, "Save", 0}).node->node_id == "2");
  CHECK(find(tree, {std::nullopt, "Save", 1}).node->node_id == "4");
  CHECK(find(tree, {std::string("label"), "Save", 0}).node->node_id == "5");
  CHECK_FALSE(find(tree, {std::nullopt, "Save", 0}).fallback_used);
}

TEST_CASE("normalized fallback applies only when exact matches run out") {
  const auto tree = sample();
  const auto r = find(tree, {std::string("push button"), "Save", 2});
  CHECK(r.fallback_used);
  CHECK(r.node->node_id == "4");
  const auto spaced = find(tree, {std::nullopt, "  TOOLS ", 0});
  CHECK(spaced.fallback_used);
  CHECK(spaced.node->node_id == "1");
  CHECK_THROWS_AS(find(tree, {std::nullopt, "Open", 0}), Error);
}

TEST_CASE("normalize_name and match_name") {
  CHECK(normalize_name("  Save\t  File ") == "save file");
  CHECK(match_name("Save", "Save") == NameMatch::Exact);
  CHECK(match_name("save ", "Save") == NameMatch::Fallback);
  CHECK(match_name("Open", "Save") == NameMatch::None);
}

TEST_CASE("find_by_id and dump_tree") {
  const auto tree = sample();
  CHECK(find_by_id(tree, "3")->name == "save");
  CHECK(find_by_id(tree, "9") == nullptr);
  const std::string dump = dump_tree(tree);
  CHECK(dump.find("window 'main'") == 0);
  CHECK(dump.find("\n    push button 'save'") != std::string::npos);
}

TEST_CASE("state and action tokens") {
  CHECK(node_state_from(to_string(NodeState::Focused)) == NodeState::Focused);
  CHECK(node_action_from(to_string(NodeAction::SetText)) == NodeAction::SetText);
  CHECK_THROWS_AS(node_action_from("hover"), Error);
}
