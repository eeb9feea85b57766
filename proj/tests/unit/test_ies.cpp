#include "doctest.h"

#include "fixtures.hpp"
#include "guicheck/error.hpp"
#include "guicheck/ies.hpp"

#include <set>

using namespace guicheck;
using namespace guicheck::ies;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("serialize and parse are inverse on random scripts") {
  Rng rng(7);
  std::set<StepKind> seen;
  for (int i = 0; i < 50; ++i) {
    const Script s = testing::random_script(rng, i);
    const std::string text = serialize(s);
    const Script back = parse(text);
    CHECK(back == s);
    CHECK(serialize(back) == text);
    for (const auto& st : s.steps()) seen.insert(kind_of(st));
  }
  CHECK(seen.size() == kAllStepKinds.size());
}

TEST_CASE("parse reads the documented layout") {
  const Script s = parse(R"(
task_id: demo
screens: [screens/home.png]
steps:
  - assert_element: {name: Save, role: push button}
  - assert_color: {name: Save, rgb: [0, 0, 0]}
  - input_text: {name: Query, text: "a: b"}
  - click: {name: Save, nth: 1}
  - select_dropdown: {name: Size, option: Large}
  - assert_layout: {page: home, ref: screens/home.png}
)");
  REQUIRE(s.steps().size() == 6);
  CHECK(s.task_id() == "demo");
  const auto& color = std::get<AssertColor>(s.steps()[1]);
  CHECK(color.expected == Rgb{0, 0, 0});
  CHECK(std::get<InputText>(s.steps()[2]).text == "a: b");
  CHECK(std::get<Click>(s.steps()[3]).selector.nth == 1);
  CHECK(std::get<AssertLayout>(s.steps()[5]).page_id == "home");
}

TEST_CASE("parse errors carry distinct codes") {
  CHECK(code_of([] { parse("task_id: x\nsteps:\n  - hover: {name: a}\n"); }) == ErrorCode::UnknownOp);
  CHECK(code_of([] { parse("task_id: x\nsteps:\n  - click: {role: button}\n"); }) == ErrorCode::MissingField);
  CHECK(code_of([] { parse("task_id: x\nsteps:\n  - assert_color: {name: a, rgb: [1, 2, 300]}\n"); }) ==
        ErrorCode::SyntaxError);
  CHECK(code_of([] { parse("[unclosed"); }) == ErrorCode::SyntaxError);
  CHECK(code_of([] { parse("task_id: x\nsteps: []\n"); }) == ErrorCode::InvalidScript);
  CHECK(code_of([] { parse("task_id: x\nsteps:\n  - click: {name: a, nth: -1}\n"); }) == ErrorCode::InvalidScript);
  CHECK(code_of([] { parse("task_id: x\nsteps:\n  - assert_layout: {page: p, ref: missing.png}\n"); }) ==
        ErrorCode::InvalidScript);
}

TEST_CASE("metadata round trip and checks") {
  const TaskMetadata meta = testing::form_metadata();
  const TaskMetadata back = parse_metadata(serialize_metadata(meta));
  CHECK(back.pages == meta.pages);
  CHECK(back.instruction == meta.instruction);
  REQUIRE(back.components.size() == meta.components.size());
  CHECK(back.components[3].navigation);

  TaskMetadata bad = meta;
  bad.components.push_back({"title", "label", "home", false});
  CHECK(code_of([&] { check_metadata(bad); }) == ErrorCode::InvalidMetadata);
  bad = meta;
  bad.components.push_back({"x", "label", "nowhere", false});
  CHECK(code_of([&] { check_metadata(bad); }) == ErrorCode::InvalidMetadata);
}

TEST_CASE("the form script is consistent with its metadata") {
  const auto report = validate_against_metadata(testing::form_script("t"), testing::form_metadata());
  CHECK(report.valid());
}

TEST_CASE("interaction on a non-navigable component followed by another page") {
  TaskMetadata meta;
  meta.pages = {"home", "done"};
  meta.components = {{"Save", "push button", "home", false}, {"Thanks", "label", "done", false}};
  const Script s("t", {Click{{std::nullopt, "Save", 0}}, AssertElement{{std::nullopt, "Thanks", 0}}}, {});
  const auto report = validate_against_metadata(s, meta);
  REQUIRE(report.findings.size() == 1);
  CHECK(report.findings[0].kind == FindingKind::InteractionOnNonNavigable);
  CHECK(report.has_errors());

  meta.components[0].navigation = true;
  CHECK(validate_against_metadata(s, meta).valid());
}

TEST_CASE("fallback name match is a warning") {
  TaskMetadata meta;
  meta.pages = {"home"};
  meta.components = {{"Save File", "push button", "home", true}};
  const Script s("t", {AssertElement{{std::nullopt, "  save   file ", 0}}}, {});
  const auto report = validate_against_metadata(s, meta);
  REQUIRE(report.findings.size() == 1);
  CHECK(report.findings[0].kind == FindingKind::FallbackNameMatch);
  CHECK_FALSE(report.has_errors());
}

namespace {

// Independent restatement of the validation rules, used as an oracle.
std::vector<Finding> oracle(const Script& s, const TaskMetadata& meta) {
  auto norm = [](std::string v) {
    std::string out;
    bool space = false;
    for (char c : v) {
      if (c == ' ' || c == '\t' || c == '\n') {
        space = !out.empty();
        continue;
      }
      if (space) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  auto matches = [&](const Selector& sel, bool fuzzy) {
    std::vector<const Component*> hits;
    for (const auto& c : meta.components) {
      const bool name_ok = fuzzy ? norm(c.name) == norm(sel.name) : c.name == sel.name;
      const bool role_ok = !sel.role || (fuzzy ? norm(*sel.role) == norm(c.role) : *sel.role == c.role);
      if (name_ok && role_ok) hits.push_back(&c);
    }
    return hits;
  };
  std::vector<Finding> out;
  const auto& steps = s.steps();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (auto* layout = std::get_if<AssertLayout>(&steps[i])) {
      if (std::find(meta.pages.begin(), meta.pages.end(), layout->page_id) == meta.pages.end()) {
        out.push_back({i, FindingKind::UnknownPage, Severity::Error, ""});
      }
      continue;
    }
    const Selector& sel = *selector_of(steps[i]);
    auto hits = matches(sel, false);
    if (hits.empty()) {
      hits = matches(sel, true);
      if (hits.empty()) {
        out.push_back({i, FindingKind::UnresolvableSelector, Severity::Error, ""});
        continue;
      }
      out.push_back({i, FindingKind::FallbackNameMatch, Severity::Warning, ""});
    }
    if (!is_interaction(kind_of(steps[i])) || i + 1 == steps.size() || hits[0]->navigation) continue;
    const std::string page = hits[0]->page_id;
    bool other = false;
    if (auto* next_layout = std::get_if<AssertLayout>(&steps[i + 1])) {
      other = next_layout->page_id != page;
    } else if (auto* next_el = std::get_if<AssertElement>(&steps[i + 1])) {
      auto next_hits = matches(next_el->selector, false);
      if (next_hits.empty()) next_hits = matches(next_el->selector, true);
      other = !next_hits.empty();
      for (auto* h : next_hits) other = other && h->page_id != page;
    }
    if (other) out.push_back({i, FindingKind::InteractionOnNonNavigable, Severity::Error, ""});
  }
  return out;
}

}  // namespace

TEST_CASE("validation agrees with a brute-force oracle") {
  Rng rng(99);
  const std::vector<std::string> names = {"Save", "save", "Open", "OK", "Done"};
  const std::vector<std::string> roles = {"push button", "label"};
  const std::vector<std::string> pages = {"home", "done", "ghost"};
  for (int trial = 0; trial < 300; ++trial) {
    TaskMetadata meta;
    meta.pages = {"home", "done"};
    for (const auto& page : meta.pages) {
      for (const auto& n : names) {
        if (rng.below(2)) meta.components.push_back({n, roles[rng.below(2)], page, rng.below(2) == 0});
      }
    }
    std::vector<Step> steps;
    std::vector<std::string> screens = {"s.png"};
    const int n = rng.range(1, 6);
    for (int k = 0; k < n; ++k) {
      Selector sel{rng.below(2) ? std::optional<std::string>(roles[rng.below(2)]) : std::nullopt,
                   rng.below(4) == 0 ? " " + names[rng.below(names.size())] : names[rng.below(names.size())], 0};
      switch (rng.below(4)) {
        case 0: steps.push_back(Click{sel}); break;
        case 1: steps.push_back(AssertElement{sel}); break;
        case 2: steps.push_back(InputText{sel, "x"}); break;
        default: steps.push_back(AssertLayout{pages[rng.below(3)], "s.png"}); break;
      }
    }
    const Script s("t", steps, screens);
    const auto expected = oracle(s, meta);
    const auto actual = validate_against_metadata(s, meta).findings;
    REQUIRE(actual.size() == expected.size());
    for (std::size_t k = 0; k < actual.size(); ++k) {
      CHECK(actual[k].step_index == expected[k].step_index);
      CHECK(actual[k].kind == expected[k].kind);
      CHECK(actual[k].severity == expected[k].severity);
    }
  }
}
