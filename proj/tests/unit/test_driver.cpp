#include "doctest.h"

#include "fixtures.hpp"
#include "guicheck/driver.hpp"
#include "guicheck/error.hpp"

#include <algorithm>

using namespace guicheck;
namespace t = guicheck::testing;

namespace {

std::unique_ptr<Session> start(sim::AppModel m, DriverOptions opts = {}) {
  return launch_sim(std::make_shared<const sim::AppModel>(std::move(m)), opts);
}

bool logs_contain(const Session& s, const std::string& needle) {
  const auto logs = s.logs();
  return std::any_of(logs.begin(), logs.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

AccessibilityNode node(Session& s, const std::string& name) {
  const auto tree = s.snapshot_tree();
  return *find(tree, {std::nullopt, name, 0}).node;
}

}  // namespace

TEST_CASE("sim session lifecycle") {
  auto s = start(t::form_app());
  CHECK(s->status() == SessionStatus::Running);
  CHECK(s->backend() == Backend::Sim);

  CHECK(s->act(node(*s, "name"), {NodeAction::SetText, "Ada"}).accepted);
  CHECK(node(*s, "name").value == "Ada");
  CHECK(s->act(node(*s, "next"), {NodeAction::Click, ""}).accepted);
  CHECK(s->snapshot_tree().name == "done");
  CHECK(s->screenshot().at(45, 65) == t::kThanksFill);

  s->terminate();
  CHECK(s->status() == SessionStatus::Exited);
  s->terminate();
  CHECK(s->status() == SessionStatus::Exited);
  CHECK_THROWS_AS(s->snapshot_tree(), Error);
}

TEST_CASE("acting on a node from an old page is stale") {
  auto s = start(t::form_app());
  const AccessibilityNode submit = node(*s, "submit");
  s->act(node(*s, "next"), {NodeAction::Click, ""});
  try {
    s->act(submit, {NodeAction::Click, ""});
    FAIL("expected StaleNode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StaleNode);
  }
}

TEST_CASE("unsupported and disabled actions are rejected") {
  sim::AppModel m = t::form_app();
  m.pages[0].widgets[3].states = {NodeState::Visible};
  auto s = start(m);
  const auto label = s->act(node(*s, "title"), {NodeAction::Click, ""});
  CHECK_FALSE(label.accepted);
  CHECK(label.reason == RejectReason::ActionUnavailable);
  const auto disabled = s->act(node(*s, "next"), {NodeAction::Click, ""});
  CHECK_FALSE(disabled.accepted);
  CHECK(disabled.reason == RejectReason::Disabled);
  CHECK(s->snapshot_tree().name == "home");
}

TEST_CASE("crash on start fails to start with the reason in the logs") {
  sim::AppModel m = t::form_app();
  m.crash_on_start = "segmentation fault in init";
  auto s = start(m);
  CHECK(s->status() == SessionStatus::FailedToStart);
  CHECK(logs_contain(*s, "segmentation fault in init"));
  CHECK_THROWS_AS(s->screenshot(), Error);
  s->terminate();
  CHECK(s->status() == SessionStatus::FailedToStart);
}

TEST_CASE("start delay against the launch timeout") {
  sim::AppModel m = t::form_app();
  m.start_delay = 12.0;
  DriverOptions opts;
  opts.timeout_s = 10.0;
  auto clock = std::make_shared<ManualClock>();
  opts.clock = clock;
  auto slow = start(m, opts);
  CHECK(slow->status() == SessionStatus::FailedToStart);
  CHECK(slow->launch_elapsed() == doctest::Approx(10.0));
  CHECK(logs_contain(*slow, "no accessibility root"));

  m.start_delay = 3.0;
  auto ok = start(m, opts);
  CHECK(ok->status() == SessionStatus::Running);
  CHECK(ok->launch_elapsed() == doctest::Approx(3.0));
}

TEST_CASE("launch descriptors") {
  const auto sim_desc = parse_launch_descriptor(R"({"kind": "sim", "model_path": "app.json"})", "/base");
  CHECK(std::get<SimLaunch>(sim_desc).model_path == std::filesystem::path("/base/app.json"));
  const auto at = parse_launch_descriptor(R"({"kind": "atspi", "command": ["prog", "-x"], "display_env": {"DISPLAY": ":9"}})", ".");
  CHECK(std::get<AtspiLaunch>(at).command.size() == 2);
  CHECK(std::get<AtspiLaunch>(at).display_env.at("DISPLAY") == ":9");
  CHECK_THROWS_AS(parse_launch_descriptor(R"({"kind": "vnc"})", "."), Error);
  CHECK_THROWS_AS(parse_launch_descriptor("[", "."), Error);
}

TEST_CASE("launch from a missing model file fails to start") {
  auto s = launch(SimLaunch{"/nonexistent/app.json"}, DriverOptions{});
  CHECK(s->status() == SessionStatus::FailedToStart);
  CHECK_FALSE(s->logs().empty());
}

TEST_CASE("accessibility bus backend requires the capability flag") {
  DriverOptions opts;
  opts.enable_atspi = false;
  auto s = launch(AtspiLaunch{{"sleep", "5"}, {}}, opts);
  CHECK(s->status() == SessionStatus::FailedToStart);
}

TEST_CASE("accessibility bus backend through a bridge process") {
  DriverOptions opts;
  opts.enable_atspi = true;
  opts.timeout_s = 5;
  opts.atspi_bridge = {"python3", (t::support_dir() / "fake_bridge.py").string()};
  auto s = launch(AtspiLaunch{{"sleep", "30"}, {{"FAKE_BRIDGE_EMPTY_SNAPSHOTS", "2"}}}, opts);
  REQUIRE(s->status() == SessionStatus::Running);
  CHECK(s->backend() == Backend::AccessibilityBus);

  const auto tree = s->snapshot_tree();
  CHECK(tree.name == "main");
  CHECK(s->act(*find(tree, {std::nullopt, "ok", 0}).node, {NodeAction::Click, ""}).accepted);
  CHECK(find(s->snapshot_tree(), {std::nullopt, "status", 0}).node->value == "clicked");

  const auto locked = s->act(*find(tree, {std::nullopt, "locked", 0}).node, {NodeAction::Click, ""});
  CHECK(locked.reason == RejectReason::Disabled);
  CHECK_THROWS_AS(s->act(*find(tree, {std::nullopt, "gone", 0}).node, {NodeAction::Click, ""}), Error);

  const RasterImage shot = s->screenshot();
  CHECK(shot.width == 40);
  CHECK(shot.at(0, 0) == Rgb{10, 120, 200});
  s->terminate();
  CHECK(s->status() == SessionStatus::Exited);
}

TEST_CASE("accessibility bus backend reports an app that exits during startup") {
  DriverOptions opts;
  opts.enable_atspi = true;
  opts.timeout_s = 3;
  opts.atspi_bridge = {"python3", (t::support_dir() / "fake_bridge.py").string()};
  auto s = launch(AtspiLaunch{{"sh", "-c", "echo boom >&2; exit 4"}, {{"FAKE_BRIDGE_EMPTY_SNAPSHOTS", "1000"}}}, opts);
  CHECK(s->status() == SessionStatus::FailedToStart);
  CHECK(logs_contain(*s, "code 4"));
}
