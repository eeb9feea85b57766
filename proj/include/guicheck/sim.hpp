#pragma once

// Deterministic simulated GUI application: pages of painted rectangles,
// first-match transition rules, and injectable faults.

#include "guicheck/accessibility.hpp"
#include "guicheck/geometry.hpp"
#include "guicheck/selector.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guicheck::sim {

struct WidgetSpec {
  std::string name;
  std::string role;
  Bounds bounds;
  Rgb fill;
  std::set<NodeState> states{NodeState::Visible, NodeState::Enabled};
  std::set<NodeAction> actions;
  std::optional<std::string> text;

  friend bool operator==(const WidgetSpec&, const WidgetSpec&) = default;
};

struct Page {
  std::string id;
  Bounds canvas;
  Rgb background;
  std::vector<WidgetSpec> widgets;

  friend bool operator==(const Page&, const Page&) = default;
};

namespace effect {
struct Navigate { std::string page_id; friend bool operator==(const Navigate&, const Navigate&) = default; };
struct SetText { Selector target; std::string text; friend bool operator==(const SetText&, const SetText&) = default; };
struct SetFill { Selector target; Rgb fill; friend bool operator==(const SetFill&, const SetFill&) = default; };
struct RemoveWidget { Selector target; friend bool operator==(const RemoveWidget&, const RemoveWidget&) = default; };
struct AddState { Selector target; NodeState state; friend bool operator==(const AddState&, const AddState&) = default; };
struct AppendLog { std::string text; friend bool operator==(const AppendLog&, const AppendLog&) = default; };
}  // namespace effect

using Effect = std::variant<effect::Navigate, effect::SetText, effect::SetFill, effect::RemoveWidget, effect::AddState,
                            effect::AppendLog>;

struct Trigger {
  Selector target;  // nth is ignored; names are unique per page
  NodeAction action = NodeAction::Click;
  std::optional<std::string> payload_match;

  friend bool operator==(const Trigger&, const Trigger&) = default;
};

struct TransitionRule {
  Trigger on;
  std::vector<Effect> effects;

  friend bool operator==(const TransitionRule&, const TransitionRule&) = default;
};

namespace fault {
struct WrongFill { Selector target; Rgb fill; friend bool operator==(const WrongFill&, const WrongFill&) = default; };
struct MissingWidget { Selector target; friend bool operator==(const MissingWidget&, const MissingWidget&) = default; };
struct DeadTransition { std::size_t rule_index = 0; friend bool operator==(const DeadTransition&, const DeadTransition&) = default; };
struct OverlapShift {
  Selector target;
  int dx = 0;
  int dy = 0;
  friend bool operator==(const OverlapShift&, const OverlapShift&) = default;
};
}  // namespace fault

using FaultSpec = std::variant<fault::WrongFill, fault::MissingWidget, fault::DeadTransition, fault::OverlapShift>;

std::string_view fault_kind(const FaultSpec& f);

struct AppModel {
  std::vector<Page> pages;  // document order
  std::string initial_page;
  std::vector<TransitionRule> transitions;
  std::optional<std::string> crash_on_start;
  double start_delay = 0.0;
  std::vector<FaultSpec> faults;

  const Page* page(std::string_view id) const;

  friend bool operator==(const AppModel&, const AppModel&) = default;
};

/// Checks every model invariant; throws DanglingReference or SyntaxError.
void check_model(const AppModel& model);

AppModel load_model(std::string_view json_text);
AppModel load_model_file(const std::string& path);
std::string serialize_model(const AppModel& model);

struct SimState {
  std::string current_page;
  std::vector<Page> pages;  // live copies, same order as the model
  std::set<std::size_t> dead_rules;
  std::vector<std::string> logs;

  const Page& page() const;
  Page& page();

  friend bool operator==(const SimState&, const SimState&) = default;
};

/// State at session start, faults applied.
SimState initial_state(const AppModel& model);

/// Index of the widget on the current page matched by the selector
/// (exact name first, normalized fallback second); nullopt when absent.
std::optional<std::size_t> resolve_widget(const Page& page, const Selector& sel);

enum class ApplyOutcome { Applied, NoEffect };

struct ApplyResult {
  SimState state;
  ApplyOutcome outcome = ApplyOutcome::NoEffect;
  std::optional<std::size_t> rule_index;
};

/// Runs the first transition rule whose trigger matches the widget, action
/// and payload. A dead rule still wins the match but produces NoEffect.
ApplyResult apply_action(const AppModel& model, const SimState& state, const Selector& target, NodeAction action,
                         const std::string& payload);

/// Background fill, then visible widgets in list order; text draws as a
/// centered bar 60% of the widget height.
RasterImage render(const SimState& state);
RasterImage render_page(const Page& page);

AccessibilityNode accessibility_tree(const SimState& state);

}  // namespace guicheck::sim
