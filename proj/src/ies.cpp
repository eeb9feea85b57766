#include "guicheck/ies.hpp"

#include "guicheck/error.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>
#include <utility>

namespace guicheck::ies {

namespace {

constexpr std::array<std::string_view, 6> kStepKeys = {"assert_element", "assert_color",  "assert_layout",
                                                       "click",          "input_text",    "select_dropdown"};

template <typename T>
T scalar_as(const YAML::Node& node, std::string_view what) {
  if (!node.IsScalar()) fail(ErrorCode::SyntaxError, std::string(what) + " must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::SyntaxError, std::string(what) + " has the wrong type");
  }
}

const YAML::Node require(const YAML::Node& map, const char* key, std::string_view where) {
  YAML::Node child = map[key];
  if (!child.IsDefined() || child.IsNull()) {
    fail(ErrorCode::MissingField, std::string(where) + ": missing '" + key + "'");
  }
  return child;
}

void reject_unknown_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::SyntaxError, std::string(where) + ": unexpected key '" + key + "'");
    }
  }
}

Selector parse_selector(const YAML::Node& body, std::string_view where) {
  Selector sel;
  sel.name = scalar_as<std::string>(require(body, "name", where), "name");
  if (auto role = body["role"]; role.IsDefined() && !role.IsNull()) sel.role = scalar_as<std::string>(role, "role");
  if (auto nth = body["nth"]; nth.IsDefined() && !nth.IsNull()) sel.nth = scalar_as<int>(nth, "nth");
  return sel;
}

Step parse_step(const YAML::Node& entry, std::size_t index) {
  const std::string where = "step " + std::to_string(index);
  if (!entry.IsMap() || entry.size() != 1) {
    fail(ErrorCode::SyntaxError, where + ": each step must be a single-key mapping");
  }
  const auto key = entry.begin()->first.as<std::string>();
  const YAML::Node body = entry.begin()->second;
  const StepKind kind = kind_from_key(key);
  if (!body.IsMap()) fail(ErrorCode::SyntaxError, where + ": step body must be a mapping");

  switch (kind) {
    case StepKind::AssertElement:
      reject_unknown_keys(body, {"name", "role", "nth"}, where);
      return AssertElement{parse_selector(body, where)};
    case StepKind::AssertColor: {
      reject_unknown_keys(body, {"name", "role", "nth", "rgb"}, where);
      const YAML::Node rgb = require(body, "rgb", where);
      if (!rgb.IsSequence() || rgb.size() != 3) fail(ErrorCode::SyntaxError, where + ": rgb must be [r,g,b]");
      return AssertColor{parse_selector(body, where),
                         make_rgb(scalar_as<long>(rgb[0], "rgb"), scalar_as<long>(rgb[1], "rgb"),
                                  scalar_as<long>(rgb[2], "rgb"))};
    }
    case StepKind::AssertLayout:
      reject_unknown_keys(body, {"page", "ref"}, where);
      return AssertLayout{scalar_as<std::string>(require(body, "page", where), "page"),
                          scalar_as<std::string>(require(body, "ref", where), "ref")};
    case StepKind::Click:
      reject_unknown_keys(body, {"name", "role", "nth"}, where);
      return Click{parse_selector(body, where)};
    case StepKind::InputText: {
      reject_unknown_keys(body, {"name", "role", "nth", "text"}, where);
      // An empty string is legitimate input; only an absent key is an error.
      const YAML::Node text = body["text"];
      if (!text.IsDefined()) fail(ErrorCode::MissingField, where + ": missing 'text'");
      return InputText{parse_selector(body, where), text.IsNull() ? std::string() : scalar_as<std::string>(text, "text")};
    }
    case StepKind::SelectDropdown:
      reject_unknown_keys(body, {"name", "role", "nth", "option"}, where);
      return SelectDropdown{parse_selector(body, where), scalar_as<std::string>(require(body, "option", where), "option")};
  }
  fail(ErrorCode::UnknownOp, key);
}

std::vector<std::string> parse_string_list(const YAML::Node& node, std::string_view what) {
  std::vector<std::string> out;
  if (!node.IsDefined() || node.IsNull()) return out;
  if (!node.IsSequence()) fail(ErrorCode::SyntaxError, std::string(what) + " must be a list");
  for (const auto& item : node) out.push_back(scalar_as<std::string>(item, what));
  return out;
}

YAML::Node load_document(std::string_view text) {
  try {
    YAML::Node root = YAML::Load(std::string(text));
    if (!root.IsMap()) fail(ErrorCode::SyntaxError, "document root must be a mapping");
    return root;
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::SyntaxError, e.what());
  }
}

void emit_selector_fields(YAML::Emitter& out, const Selector& sel) {
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << sel.name;
  if (sel.role) out << YAML::Key << "role" << YAML::Value << YAML::DoubleQuoted << *sel.role;
  if (sel.nth != 0) out << YAML::Key << "nth" << YAML::Value << sel.nth;
}

struct Resolution {
  std::vector<std::size_t> components;
  bool fallback = false;
};

Resolution resolve(const Selector& sel, const TaskMetadata& meta) {
  Resolution res;
  for (std::size_t i = 0; i < meta.components.size(); ++i) {
    const auto& c = meta.components[i];
    if (c.name == sel.name && (!sel.role || *sel.role == c.role)) res.components.push_back(i);
  }
  if (!res.components.empty()) return res;
  for (std::size_t i = 0; i < meta.components.size(); ++i) {
    const auto& c = meta.components[i];
    if (normalize_name(c.name) == normalize_name(sel.name) &&
        (!sel.role || normalize_name(*sel.role) == normalize_name(c.role))) {
      res.components.push_back(i);
    }
  }
  res.fallback = !res.components.empty();
  return res;
}

}  // namespace

StepKind kind_of(const Step& step) { return static_cast<StepKind>(step.index()); }

std::string_view key_of(StepKind kind) { return kStepKeys[static_cast<std::size_t>(kind)]; }

StepKind kind_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kStepKeys.size(); ++i) {
    if (kStepKeys[i] == key) return static_cast<StepKind>(i);
  }
  fail(ErrorCode::UnknownOp, "unknown step kind '" + std::string(key) + "'");
}

bool is_interaction(StepKind kind) {
  return kind == StepKind::Click || kind == StepKind::InputText || kind == StepKind::SelectDropdown;
}

const Selector* selector_of(const Step& step) {
  return std::visit(
      [](const auto& s) -> const Selector* {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, AssertLayout>) {
          return nullptr;
        } else {
          return &s.selector;
        }
      },
      step);
}

Script::Script(std::string task_id, std::vector<Step> steps, std::vector<std::string> screens)
    : task_id_(std::move(task_id)), steps_(std::move(steps)), screens_(std::move(screens)) {
  if (steps_.empty()) fail(ErrorCode::InvalidScript, "script '" + task_id_ + "' has no steps");
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (const Selector* sel = selector_of(steps_[i])) {
      if (sel->name.empty()) fail(ErrorCode::InvalidScript, "step " + std::to_string(i) + ": empty selector name");
      if (sel->nth < 0) fail(ErrorCode::InvalidScript, "step " + std::to_string(i) + ": negative nth");
    } else {
      const auto& layout = std::get<AssertLayout>(steps_[i]);
      if (std::find(screens_.begin(), screens_.end(), layout.ref_image_path) == screens_.end()) {
        fail(ErrorCode::InvalidScript,
             "step " + std::to_string(i) + ": layout reference '" + layout.ref_image_path + "' not listed in screens");
      }
    }
  }
}

Script parse(std::string_view text) {
  const YAML::Node root = load_document(text);
  reject_unknown_keys(root, {"task_id", "screens", "steps"}, "script");
  auto task_id = scalar_as<std::string>(require(root, "task_id", "script"), "task_id");
  auto screens = parse_string_list(root["screens"], "screens");
  const YAML::Node steps_node = require(root, "steps", "script");
  if (!steps_node.IsSequence()) fail(ErrorCode::SyntaxError, "steps must be a list");
  std::vector<Step> steps;
  steps.reserve(steps_node.size());
  for (std::size_t i = 0; i < steps_node.size(); ++i) steps.push_back(parse_step(steps_node[i], i));
  return Script(std::move(task_id), std::move(steps), std::move(screens));
}

std::string serialize(const Script& script) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "task_id" << YAML::Value << YAML::DoubleQuoted << script.task_id();
  out << YAML::Key << "screens" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : script.screens()) out << YAML::DoubleQuoted << s;
  out << YAML::EndSeq;
  out << YAML::Key << "steps" << YAML::Value << YAML::BeginSeq;
  for (const Step& step : script.steps()) {
    out << YAML::BeginMap << YAML::Key << std::string(key_of(kind_of(step))) << YAML::Value << YAML::Flow
        << YAML::BeginMap;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, AssertLayout>) {
            out << YAML::Key << "page" << YAML::Value << YAML::DoubleQuoted << s.page_id;
            out << YAML::Key << "ref" << YAML::Value << YAML::DoubleQuoted << s.ref_image_path;
          } else {
            emit_selector_fields(out, s.selector);
            if constexpr (std::is_same_v<T, AssertColor>) {
              out << YAML::Key << "rgb" << YAML::Value << YAML::Flow << YAML::BeginSeq << int{s.expected.r}
                  << int{s.expected.g} << int{s.expected.b} << YAML::EndSeq;
            } else if constexpr (std::is_same_v<T, InputText>) {
              out << YAML::Key << "text" << YAML::Value << YAML::DoubleQuoted << s.text;
            } else if constexpr (std::is_same_v<T, SelectDropdown>) {
              out << YAML::Key << "option" << YAML::Value << YAML::DoubleQuoted << s.option;
            }
          }
        },
        step);
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void check_metadata(const TaskMetadata& meta) {
  const std::set<std::string> pages(meta.pages.begin(), meta.pages.end());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : meta.components) {
    if (c.name.empty()) fail(ErrorCode::InvalidMetadata, "component with empty name");
    if (!pages.contains(c.page_id)) {
      fail(ErrorCode::InvalidMetadata, "component '" + c.name + "' references unknown page '" + c.page_id + "'");
    }
    if (!seen.emplace(c.page_id, c.name).second) {
      fail(ErrorCode::InvalidMetadata, "duplicate component '" + c.name + "' on page '" + c.page_id + "'");
    }
  }
}

TaskMetadata parse_metadata(std::string_view text) {
  const YAML::Node root = load_document(text);
  reject_unknown_keys(root, {"instruction", "pages", "components"}, "metadata");
  TaskMetadata meta;
  if (auto instr = root["instruction"]; instr.IsDefined() && !instr.IsNull()) {
    meta.instruction = scalar_as<std::string>(instr, "instruction");
  }
  meta.pages = parse_string_list(require(root, "pages", "metadata"), "pages");
  const YAML::Node comps = root["components"];
  if (comps.IsDefined() && !comps.IsNull()) {
    if (!comps.IsSequence()) fail(ErrorCode::SyntaxError, "components must be a list");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const YAML::Node c = comps[i];
      const std::string where = "component " + std::to_string(i);
      if (!c.IsMap()) fail(ErrorCode::SyntaxError, where + " must be a mapping");
      reject_unknown_keys(c, {"name", "role", "page", "navigation"}, where);
      Component comp;
      comp.name = scalar_as<std::string>(require(c, "name", where), "name");
      comp.role = scalar_as<std::string>(require(c, "role", where), "role");
      comp.page_id = scalar_as<std::string>(require(c, "page", where), "page");
      comp.navigation = scalar_as<bool>(require(c, "navigation", where), "navigation");
      meta.components.push_back(std::move(comp));
    }
  }
  check_metadata(meta);
  return meta;
}

std::string serialize_metadata(const TaskMetadata& meta) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "instruction" << YAML::Value << YAML::DoubleQuoted << meta.instruction;
  out << YAML::Key << "pages" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : meta.pages) out << YAML::DoubleQuoted << p;
  out << YAML::EndSeq;
  out << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : meta.components) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.name;
    out << YAML::Key << "role" << YAML::Value << YAML::DoubleQuoted << c.role;
    out << YAML::Key << "page" << YAML::Value << YAML::DoubleQuoted << c.page_id;
    out << YAML::Key << "navigation" << YAML::Value << c.navigation;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string_view to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::UnresolvableSelector: return "UnresolvableSelector";
    case FindingKind::FallbackNameMatch: return "FallbackNameMatch";
    case FindingKind::InteractionOnNonNavigable: return "InteractionOnNonNavigable";
    case FindingKind::UnknownPage: return "UnknownPage";
  }
  return "Unknown";
}

bool ValidationReport::has_errors() const {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; });
}

ValidationReport validate_against_metadata(const Script& script, const TaskMetadata& meta) {
  ValidationReport report;
  const auto& steps = script.steps();
  const std::set<std::string> pages(meta.pages.begin(), meta.pages.end());

  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Step& step = steps[i];
    const StepKind kind = kind_of(step);

    if (const Selector* sel = selector_of(step)) {
      const Resolution res = resolve(*sel, meta);
      if (res.components.empty()) {
        report.findings.push_back({i, FindingKind::UnresolvableSelector, Severity::Error,
                                   "selector " + describe(*sel) + " matches no metadata component"});
        continue;
      }
      if (res.fallback) {
        report.findings.push_back({i, FindingKind::FallbackNameMatch, Severity::Warning,
                                   "selector " + describe(*sel) + " matched only after name normalization"});
      }

      if (!is_interaction(kind) || i + 1 >= steps.size()) continue;
      const Component& target = meta.components[res.components.front()];
      if (target.navigation) continue;

      bool page_change = false;
      const Step& next = steps[i + 1];
      if (const auto* layout = std::get_if<AssertLayout>(&next)) {
        page_change = layout->page_id != target.page_id;
      } else if (const auto* element = std::get_if<AssertElement>(&next)) {
        const Resolution next_res = resolve(element->selector, meta);
        page_change = !next_res.components.empty() &&
                      std::none_of(next_res.components.begin(), next_res.components.end(),
                                   [&](std::size_t c) { return meta.components[c].page_id == target.page_id; });
      }
      if (page_change) {
        report.findings.push_back({i, FindingKind::InteractionOnNonNavigable, Severity::Error,
                                   "interaction on non-navigable component " + describe(*sel) +
                                       " is followed by an assertion on a different page"});
      }
    } else {
      const auto& layout = std::get<AssertLayout>(step);
      if (!pages.contains(layout.page_id)) {
        report.findings.push_back(
            {i, FindingKind::UnknownPage, Severity::Error, "layout page '" + layout.page_id + "' is not in metadata"});
      }
    }
  }
  return report;
}

}  // namespace guicheck::ies
