#pragma once

// Interactive evaluation scripts: ordered assertion and interaction steps
// that describe what a GUI program must show and how it must react.

#include "guicheck/geometry.hpp"
#include "guicheck/selector.hpp"

#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guicheck::ies {

struct AssertElement {
  Selector selector;
  friend bool operator==(const AssertElement&, const AssertElement&) = default;
};

struct AssertColor {
  Selector selector;
  Rgb expected;
  friend bool operator==(const AssertColor&, const AssertColor&) = default;
};

struct AssertLayout {
  std::string page_id;
  std::string ref_image_path;
  friend bool operator==(const AssertLayout&, const AssertLayout&) = default;
};

struct Click {
  Selector selector;
  friend bool operator==(const Click&, const Click&) = default;
};

struct InputText {
  Selector selector;
  std::string text;
  friend bool operator==(const InputText&, const InputText&) = default;
};

struct SelectDropdown {
  Selector selector;
  std::string option;
  friend bool operator==(const SelectDropdown&, const SelectDropdown&) = default;
};

using Step = std::variant<AssertElement, AssertColor, AssertLayout, Click, InputText, SelectDropdown>;

/// Variant order matches Step alternatives.
enum class StepKind { AssertElement, AssertColor, AssertLayout, Click, InputText, SelectDropdown };

inline constexpr std::array<StepKind, 6> kAllStepKinds = {StepKind::AssertElement, StepKind::AssertColor,
                                                          StepKind::AssertLayout,  StepKind::Click,
                                                          StepKind::InputText,     StepKind::SelectDropdown};

StepKind kind_of(const Step& step);

/// Document key, e.g. "assert_color".
std::string_view key_of(StepKind kind);
StepKind kind_from_key(std::string_view key);  // throws UnknownOp

bool is_interaction(StepKind kind);

/// Selector of the step, or nullptr for AssertLayout.
const Selector* selector_of(const Step& step);

class Script {
public:
  /// Enforces the invariants: at least one step, nth >= 0, non-empty names,
  /// every layout reference listed in screens. Throws InvalidScript.
  Script(std::string task_id, std::vector<Step> steps, std::vector<std::string> screens);

  const std::string& task_id() const { return task_id_; }
  const std::vector<Step>& steps() const { return steps_; }
  const std::vector<std::string>& screens() const { return screens_; }

  friend bool operator==(const Script&, const Script&) = default;

private:
  std::string task_id_;
  std::vector<Step> steps_;
  std::vector<std::string> screens_;
};

Script parse(std::string_view text);
std::string serialize(const Script& script);

struct Component {
  std::string name;
  std::string role;
  std::string page_id;
  bool navigation = false;
};

struct TaskMetadata {
  std::vector<Component> components;
  std::vector<std::string> pages;
  std::string instruction;
};

/// Throws InvalidMetadata when a component references an unknown page or a
/// name repeats within one page.
void check_metadata(const TaskMetadata& meta);

TaskMetadata parse_metadata(std::string_view text);
std::string serialize_metadata(const TaskMetadata& meta);

enum class Severity { Warning, Error };

enum class FindingKind { UnresolvableSelector, FallbackNameMatch, InteractionOnNonNavigable, UnknownPage };

std::string_view to_string(Severity s);
std::string_view to_string(FindingKind k);

struct Finding {
  std::size_t step_index = 0;
  FindingKind kind{};
  Severity severity{};
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool valid() const { return findings.empty(); }
  bool has_errors() const;
};

/// Consistency check of a script against its task metadata. Findings are
/// ordered by step index, then by rule (selector resolution, navigation,
/// page existence).
ValidationReport validate_against_metadata(const Script& script, const TaskMetadata& meta);

}  // namespace guicheck::ies
