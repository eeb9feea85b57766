#include "fixtures.hpp"

#include "guicheck/image_io.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace guicheck::testing {

namespace {

std::atomic<int> temp_counter{0};

sim::WidgetSpec widget(std::string name, std::string role, Bounds b, Rgb fill, std::optional<std::string> text = {},
                       std::set<NodeAction> actions = {}) {
  sim::WidgetSpec w;
  w.name = std::move(name);
  w.role = std::move(role);
  w.bounds = b;
  w.fill = fill;
  w.text = std::move(text);
  w.actions = std::move(actions);
  return w;
}

Selector sel(std::string name, std::optional<std::string> role = {}) {
  Selector s;
  s.name = std::move(name);
  s.role = std::move(role);
  return s;
}

std::string pick_name(Rng& rng) {
  static const char* kNames[] = {"Submit", "save: draft", "say \"hi\"", "#tag", "  padded  ", "menu/file",
                                 "ok",     "Ünïcode",     "a'b",         "yes", "- dash",     "[list]"};
  return kNames[rng.below(std::size(kNames))];
}

Selector random_selector(Rng& rng) {
  static const char* kRoles[] = {"push button", "label", "text", "combo box", "panel"};
  Selector s;
  s.name = pick_name(rng);
  if (rng.below(2)) s.role = kRoles[rng.below(std::size(kRoles))];
  if (rng.below(3) == 0) s.nth = static_cast<int>(rng.below(3));
  return s;
}

ies::Step random_step(Rng& rng, ies::StepKind kind, const std::vector<std::string>& screens) {
  switch (kind) {
    case ies::StepKind::AssertElement: return ies::AssertElement{random_selector(rng)};
    case ies::StepKind::AssertColor:
      return ies::AssertColor{random_selector(rng), Rgb{static_cast<std::uint8_t>(rng.below(256)),
                                                        static_cast<std::uint8_t>(rng.below(256)),
                                                        static_cast<std::uint8_t>(rng.below(256))}};
    case ies::StepKind::AssertLayout: {
      const std::string& ref = screens[rng.below(screens.size())];
      return ies::AssertLayout{"page " + std::to_string(rng.below(4)), ref};
    }
    case ies::StepKind::Click: return ies::Click{random_selector(rng)};
    case ies::StepKind::InputText: {
      static const char* kTexts[] = {"", "hello", "a: b", "line\nbreak", "42", "null", "'quoted'"};
      return ies::InputText{random_selector(rng), kTexts[rng.below(std::size(kTexts))]};
    }
    case ies::StepKind::SelectDropdown: return ies::SelectDropdown{random_selector(rng), pick_name(rng)};
  }
  return ies::AssertElement{random_selector(rng)};
}

std::string hex_pattern(Rgb c) { return to_hex(c); }

std::string bounds_pattern(const Bounds& b) {
  return std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," + std::to_string(b.h) + "\\]";
}

nlohmann::json bug(const std::string& report) { return {{"type", "report_bug"}, {"report", report}}; }

nlohmann::json rule(const std::string& pattern, nlohmann::json decision) {
  return {{"agent", "operator"}, {"pattern", pattern}, {"decision", std::move(decision)}};
}

const sim::WidgetSpec& find_widget(const sim::AppModel& m, const std::string& page, const std::string& name) {
  for (const auto& w : m.page(page)->widgets) {
    if (w.name == name) return w;
  }
  throw std::runtime_error("fixture widget missing: " + name);
}

}  // namespace

fs::path support_dir() { return GUICHECK_TEST_SUPPORT_DIR; }

TempDir::TempDir(const std::string& tag) {
  path_ = fs::temp_directory_path() /
          ("guicheck-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(temp_counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

ies::Script random_script(Rng& rng, int index, bool cover_all) {
  std::vector<std::string> screens;
  const int n_screens = rng.range(1, 3);
  for (int i = 0; i < n_screens; ++i) screens.push_back("screens/s" + std::to_string(i) + ".png");

  std::vector<ies::StepKind> kinds;
  if (cover_all) kinds.assign(ies::kAllStepKinds.begin(), ies::kAllStepKinds.end());
  const int extra = rng.range(cover_all ? 0 : 1, 8);
  for (int i = 0; i < extra; ++i) kinds.push_back(ies::kAllStepKinds[rng.below(ies::kAllStepKinds.size())]);
  rng.shuffle(kinds);

  std::vector<ies::Step> steps;
  for (auto k : kinds) steps.push_back(random_step(rng, k, screens));
  return ies::Script("task-" + std::to_string(index) + (index % 3 == 0 ? ": colon" : ""), std::move(steps),
                     std::move(screens));
}

sim::AppModel form_app() {
  sim::AppModel m;
  sim::Page home;
  home.id = "home";
  home.canvas = Bounds{0, 0, 320, 240};
  home.background = Rgb{0xf0, 0xf0, 0xf0};
  home.widgets.push_back(widget("title", "label", {20, 10, 280, 30}, kTitleFill, "Sign up"));
  home.widgets.push_back(widget("name", "text", {20, 60, 180, 30}, Rgb{0xff, 0xff, 0xff}, std::nullopt,
                                {NodeAction::SetText, NodeAction::Focus}));
  home.widgets.push_back(widget("submit", "push button", {20, 110, 100, 36}, kSubmitFill, "Submit", {NodeAction::Click}));
  home.widgets.push_back(widget("next", "push button", {140, 110, 100, 36}, kNextFill, "Next", {NodeAction::Click}));
  home.widgets.push_back(widget("status", "label", {20, 170, 280, 30}, Rgb{0xc8, 0xc8, 0xd8}));

  sim::Page done;
  done.id = "done";
  done.canvas = Bounds{0, 0, 320, 240};
  done.background = Rgb{0xf0, 0xf0, 0xf0};
  done.widgets.push_back(widget("thanks", "label", {40, 60, 240, 60}, kThanksFill, "Thanks"));
  done.widgets.push_back(widget("back", "push button", {40, 150, 100, 36}, Rgb{0x66, 0x66, 0x66}, "Back", {NodeAction::Click}));

  m.pages = {home, done};
  m.initial_page = "home";
  m.transitions.push_back({{sel("submit"), NodeAction::Click, std::nullopt},
                           {sim::effect::SetText{sel("status"), "Saved"}, sim::effect::AppendLog{"form submitted"}}});
  m.transitions.push_back({{sel("next"), NodeAction::Click, std::nullopt}, {sim::effect::Navigate{"done"}}});
  m.transitions.push_back({{sel("back"), NodeAction::Click, std::nullopt}, {sim::effect::Navigate{"home"}}});
  return m;
}

ies::Script form_script(const std::string& task_id) {
  std::vector<ies::Step> steps = {
      ies::AssertElement{sel("title")},
      ies::AssertColor{sel("title"), kTitleFill},
      ies::AssertColor{sel("submit", "push button"), kSubmitFill},
      ies::AssertColor{sel("next", "push button"), kNextFill},
      ies::InputText{sel("name"), "Ada"},
      ies::Click{sel("submit", "push button")},
      ies::AssertElement{sel("status")},
      ies::Click{sel("next", "push button")},
      ies::AssertElement{sel("thanks")},
      ies::AssertColor{sel("thanks"), kThanksFill},
      ies::AssertLayout{"done", "screens/done.png"},
      ies::Click{sel("back", "push button")},
      ies::AssertElement{sel("title")},
  };
  return ies::Script(task_id, std::move(steps), {"screens/done.png"});
}

ies::TaskMetadata form_metadata() {
  ies::TaskMetadata meta;
  meta.instruction = "Sign-up form: a title, a name field, submit and next buttons; next leads to a thank-you page "
                     "with a back button.";
  meta.pages = {"home", "done"};
  meta.components = {{"title", "label", "home", false},       {"name", "text", "home", false},
                     {"submit", "push button", "home", false}, {"next", "push button", "home", true},
                     {"status", "label", "home", false},       {"thanks", "label", "done", false},
                     {"back", "push button", "done", true}};
  return meta;
}

std::vector<RepairTask> repair_tasks() {
  const sim::AppModel fixed = form_app();
  std::vector<RepairTask> tasks;
  auto add = [&](std::string id, sim::FaultSpec fault, std::string bug_text) {
    RepairTask t;
    t.id = std::move(id);
    t.fault = std::string(sim::fault_kind(fault));
    t.bug_text = std::move(bug_text);
    t.fixed = fixed;
    t.broken = fixed;
    t.broken.faults.push_back(std::move(fault));
    tasks.push_back(std::move(t));
  };
  add("r01-fill-title", sim::fault::WrongFill{sel("title"), Rgb{0xcc, 0x33, 0x33}}, "wrong fill on title");
  add("r02-fill-submit", sim::fault::WrongFill{sel("submit"), Rgb{0xcc, 0x22, 0x22}}, "wrong fill on submit");
  add("r03-fill-next", sim::fault::WrongFill{sel("next"), Rgb{0x99, 0x22, 0xcc}}, "wrong fill on next");
  add("r04-missing-status", sim::fault::MissingWidget{sel("status")}, "missing widget status");
  add("r05-missing-title", sim::fault::MissingWidget{sel("title")}, "missing widget title");
  add("r06-missing-thanks", sim::fault::MissingWidget{sel("thanks")}, "missing widget thanks");
  add("r07-dead-next", sim::fault::DeadTransition{kNextRule}, "next does not navigate");
  add("r08-dead-back", sim::fault::DeadTransition{kBackRule}, "back does not navigate");
  add("r09-shift-next", sim::fault::OverlapShift{sel("next"), -120, 0}, "next displaced");
  add("r10-shift-submit", sim::fault::OverlapShift{sel("submit"), 120, 0}, "submit displaced");
  return tasks;
}

nlohmann::json operator_rules() {
  const sim::AppModel app = form_app();
  const std::string home = "== observation ==\\npage: home\\n";
  const std::string done = "== observation ==\\npage: done\\n";
  const std::string body = "(?:(?!== )[\\s\\S])*";
  auto missing = [&](const std::string& page, const std::string& name) {
    return page + "(?:(?!'" + name + "' )[\\s\\S])*$";
  };
  auto displaced = [&](const std::string& page, const std::string& page_id, const std::string& name) {
    return page + body + "'" + name + "' \\[(?!" + bounds_pattern(find_widget(app, page_id, name).bounds) + ")";
  };
  auto wrong_fill = [&](const std::string& page, const std::string& name, Rgb expected) {
    return page + body + "'" + name + "' \\[[^\\]]*\\] fill=(?!" + hex_pattern(expected) + ")";
  };
  auto after = [&](const std::string& name, const std::string& page) {
    return "action: click [^\\n]*'" + name + "'[^\\n]*-> accepted\\n" + page;
  };
  auto click = [](const std::string& name) {
    return nlohmann::json{{"type", "interact"}, {"target", {{"name", name}, {"role", "push button"}}}, {"action", "click"}};
  };

  nlohmann::json rules = nlohmann::json::array();
  for (const char* w : {"title", "name", "submit", "next", "status"}) rules.push_back(rule(missing(home, w), bug(std::string("missing widget ") + w)));
  for (const char* w : {"thanks", "back"}) rules.push_back(rule(missing(done, w), bug(std::string("missing widget ") + w)));
  for (const char* w : {"submit", "next"}) rules.push_back(rule(displaced(home, "home", w), bug(std::string(w) + " displaced")));
  rules.push_back(rule(wrong_fill(home, "title", kTitleFill), bug("wrong fill on title")));
  rules.push_back(rule(wrong_fill(home, "submit", kSubmitFill), bug("wrong fill on submit")));
  rules.push_back(rule(wrong_fill(home, "next", kNextFill), bug("wrong fill on next")));
  rules.push_back(rule(wrong_fill(done, "thanks", kThanksFill), bug("wrong fill on thanks")));
  rules.push_back(rule(after("next", home), bug("next does not navigate")));
  rules.push_back(rule(after("back", done), bug("back does not navigate")));
  rules.push_back(rule(after("back", home), {{"type", "finish"}}));
  rules.push_back(rule(home, click("next")));
  rules.push_back(rule(done, click("back")));
  return {{"model", "scripted"}, {"rules", rules}};
}

nlohmann::json fixer_rules(const RepairTask& task) {
  const nlohmann::json edit = {{"type", "edit"},
                               {"report", "restore " + task.fault + " in app.json"},
                               {"edits", {{{"path", "app.json"}, {"content", sim::serialize_model(task.fixed)}}}}};
  nlohmann::json rules = nlohmann::json::array();
  rules.push_back({{"agent", "fixer"}, {"pattern", task.bug_text}, {"decision", edit}});
  if (task.fault == "missing_widget") {
    // A widget removed in the source is visible without running the program.
    rules.push_back({{"agent", "fixer"}, {"pattern", "\"kind\": \"missing_widget\""}, {"decision", edit}});
  }
  return {{"model", "scripted"}, {"rules", rules}};
}

void write_repair_suite(const fs::path& suite_dir, const std::vector<RepairTask>& tasks) {
  for (const auto& t : tasks) {
    const fs::path dir = suite_dir / t.id;
    write_file(dir / "ies.yaml", ies::serialize(form_script(t.id)));
    write_file(dir / "meta.yaml", ies::serialize_metadata(form_metadata()));
    write_file(dir / "app.json", sim::serialize_model(t.broken));
    fs::create_directories(dir / "screens");
    write_png(dir / "screens" / "done.png", sim::render_page(*t.fixed.page("done")));
  }
}

fs::path write_reasoner_config(const fs::path& dir, const RepairTask& task) {
  write_file(dir / "operator_rules.json", operator_rules().dump(2));
  write_file(dir / "fixer_rules.json", fixer_rules(task).dump(2));
  const nlohmann::json cfg = {{"operator", {{"kind", "scripted"}, {"rules_path", "operator_rules.json"}}},
                              {"fixer", {{"kind", "scripted"}, {"rules_path", "fixer_rules.json"}}}};
  write_file(dir / "reasoner.json", cfg.dump(2));
  return dir / "reasoner.json";
}

}  // namespace guicheck::testing
