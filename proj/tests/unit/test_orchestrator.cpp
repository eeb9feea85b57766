#include "doctest.h"

#include "fixtures.hpp"
#include "guicheck/debug_loop.hpp"
#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"

#include "httplib.h"

#include <cstdlib>
#include <thread>

using namespace guicheck;
using namespace guicheck::agent;
namespace t = guicheck::testing;
using nlohmann::json;

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

Decision decision(const json& j) { return decision_from_json(j); }

// Records every context it is asked about, then delegates.
class Recording final : public Reasoner {
public:
  explicit Recording(std::shared_ptr<Reasoner> inner) : inner_(std::move(inner)) {}
  Proposal propose(const Context& c) override {
    seen.push_back(c);
    return inner_->propose(c);
  }
  std::vector<Context> seen;

private:
  std::shared_ptr<Reasoner> inner_;
};

std::shared_ptr<Reasoner> scripted(const json& rules) { return ScriptedReasoner::from_json(rules); }

const t::RepairTask& task_named(const std::vector<t::RepairTask>& tasks, const std::string& id) {
  for (const auto& task : tasks) {
    if (task.id == id) return task;
  }
  throw std::runtime_error("no task " + id);
}

Workspace workspace_with(const t::TempDir& dir, const sim::AppModel& model) {
  t::write_file(dir / "ws/app.json", sim::serialize_model(model));
  return Workspace(dir / "ws");
}

std::vector<std::string> plan_actions(const std::vector<TraceEvent>& events) {
  std::vector<std::string> out;
  for (const auto& e : events) {
    if (e.actor == "planner" && e.event == "plan") out.push_back(e.payload["action"].get<std::string>());
  }
  return out;
}

bool resolves(const std::filesystem::path& app_json) {
  const auto fixed = t::form_app();
  const RasterImage done = sim::render_page(*fixed.page("done"));
  layout::GridScorer scorer;
  const auto report = eval::run_task(
      t::form_script("check"), [&] { return launch(SimLaunch{app_json}, DriverOptions{}); }, scorer,
      [&](const std::string&) { return done; });
  return report.resolved;
}

}  // namespace

TEST_CASE("decision schema") {
  const Decision d = decision({{"type", "interact"}, {"target", {{"name", "Save"}, {"nth", 1}}}, {"action", "input_text"}, {"payload", "x"}});
  CHECK(d.type == DecisionType::Interact);
  CHECK(d.action == NodeAction::SetText);
  CHECK(d.target->nth == 1);
  CHECK(decision_from_json(json::parse(to_json(d).dump())) == d);

  CHECK(code_of([] { decision({{"type", "dance"}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([] { decision({{"type", "interact"}, {"action", "click"}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([] { decision({{"type", "interact"}, {"target", {{"name", "a"}}}, {"action", "hover"}}); }) ==
        ErrorCode::ReasonerError);
  CHECK(code_of([] { decision({{"type", "finish"}, {"colour", "red"}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([] { decision({{"type", "edit"}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([] { decision(json::array()); }) == ErrorCode::ReasonerError);
}

TEST_CASE("scripted reasoner: first match wins, agent filters apply") {
  auto r = ScriptedReasoner::from_json(json{{"rules",
                                             {{{"agent", "fixer"}, {"pattern", "alpha"}, {"decision", {{"type", "finish"}, {"report", "fixer"}}}},
                                              {{"pattern", "alpha|beta"}, {"decision", {{"type", "finish"}, {"report", "any"}}}},
                                              {{"pattern", "alpha"}, {"decision", {{"type", "finish"}, {"report", "late"}}}}}}});
  Context ctx;
  ctx.agent = Agent::Operator;
  ctx.entries.push_back({"observation", "alpha", std::nullopt});
  const Proposal p = r->propose(ctx);
  CHECK(p.decision.report == "any");
  CHECK(p.usage.model == "scripted");
  CHECK(p.usage.prompt_tokens == 0);
  ctx.agent = Agent::Fixer;
  CHECK(r->propose(ctx).decision.report == "fixer");
  ctx.entries[0].text = "gamma";
  CHECK(code_of([&] { r->propose(ctx); }) == ErrorCode::ReasonerError);

  CHECK(code_of([] { ScriptedReasoner::from_json(json{{"rules", {{{"pattern", "("}, {"decision", {{"type", "finish"}}}}}}}); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { load_reasoner(json{{"kind", "oracle"}}, "."); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_reasoner(json{{"kind", "scripted"}, {"rules_path", "/nonexistent.json"}}, "."); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("context rendering") {
  Context ctx;
  ctx.entries.push_back({"instruction", "do it", std::nullopt});
  ctx.entries.push_back({"observation", "page: home\n", RasterImage(2, 2)});
  CHECK(ctx.text() == "== instruction ==\ndo it\n== observation ==\npage: home\n");
  CHECK(ctx.image_count() == 1);
  CHECK(ctx.count("observation") == 1);

  const auto body = RemoteReasoner::request_body("m", ctx);
  CHECK(body["model"] == "m");
  CHECK(body["context"][1]["image"].get<std::string>().rfind("iVBOR", 0) == 0);
  CHECK_FALSE(body["context"][0].contains("image"));
}

TEST_CASE("remote reasoner against a local endpoint") {
  httplib::Server server;
  std::string seen_auth;
  json seen_body;
  server.Post("/v1/decide", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    res.set_content(json{{"decision", {{"type", "finish"}, {"report", "looks fine"}}},
                         {"usage", {{"prompt_tokens", 120}, {"completion_tokens", 8}}}}
                        .dump(),
                    "application/json");
  });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"decision": {"type": "fly"}})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("GUICHECK_TEST_KEY", "sekret", 1);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  RemoteReasoner r(base + "/v1/decide", "GUICHECK_TEST_KEY", "model-x", 5);
  Context ctx;
  ctx.agent = Agent::Fixer;
  ctx.entries.push_back({"bug", "broken", std::nullopt});
  const Proposal p = r.propose(ctx);
  CHECK(p.decision.report == "looks fine");
  CHECK(p.usage.model == "model-x");
  CHECK(p.usage.prompt_tokens == 120);
  CHECK(p.usage.completion_tokens == 8);
  CHECK(seen_auth == "Bearer sekret");
  CHECK(seen_body["agent"] == "fixer");
  CHECK(seen_body["context"][0]["role"] == "bug");

  RemoteReasoner bad(base + "/bad", "", "m", 5);
  CHECK(code_of([&] { bad.propose(ctx); }) == ErrorCode::ReasonerError);
  RemoteReasoner missing(base + "/nothing", "", "m", 5);
  CHECK(code_of([&] { missing.propose(ctx); }) == ErrorCode::ReasonerError);
  RemoteReasoner no_key(base + "/v1/decide", "GUICHECK_TEST_UNSET_KEY", "m", 5);
  CHECK(code_of([&] { no_key.propose(ctx); }) == ErrorCode::ConfigError);

  server.stop();
  th.join();
  CHECK(code_of([&] { r.propose(ctx); }) == ErrorCode::ReasonerError);
}

TEST_CASE("workspace edits are hash-gated and all-or-nothing") {
  t::TempDir dir("ws");
  t::write_file(dir / "a.txt", "one");
  t::write_file(dir / "sub/b.txt", "two");
  t::write_file(dir / ".git/config", "hidden");
  Workspace ws(dir.path());
  CHECK(ws.files() == std::vector<std::string>{"a.txt", "sub/b.txt"});
  const std::string ha = ws.hash("a.txt");
  const std::string hb = ws.hash("sub/b.txt");

  CHECK(code_of([&] { ws.apply({{"a.txt", ha, "ONE"}, {"sub/b.txt", "0000", "TWO"}}); }) == ErrorCode::StaleWorkspace);
  CHECK(ws.read("a.txt") == "one");

  ws.apply({{"a.txt", ha, "ONE"}, {"sub/b.txt", hb, "TWO"}});
  CHECK(ws.read("a.txt") == "ONE");
  CHECK(ws.read("sub/b.txt") == "TWO");

  CHECK(code_of([&] { ws.apply({{"../x", ha, ""}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([&] { ws.apply({{"/etc/passwd", ha, ""}}); }) == ErrorCode::ReasonerError);
  CHECK(code_of([&] { ws.apply({{"new.txt", ha, ""}}); }) == ErrorCode::ReasonerError);
}

TEST_CASE("two fixes prepared on the same file: the second is stale") {
  t::TempDir dir("stale");
  const auto tasks = t::repair_tasks();
  const auto& task = task_named(tasks, "r02-fill-submit");
  Workspace ws = workspace_with(dir, task.broken);
  DebugTrace trace;
  auto fixer_reasoner = scripted(t::fixer_rules(task));
  Fixer a(*fixer_reasoner, trace);
  Fixer b(*fixer_reasoner, trace);
  const BugReport bug{"reported", task.bug_text, std::nullopt, "", ""};
  const PreparedFix pa = a.prepare_fix(ws, bug, "i", true);
  const PreparedFix pb = b.prepare_fix(ws, bug, "i", true);
  const Decision da = fixer_reasoner->propose(pa.context).decision;
  const Decision db = fixer_reasoner->propose(pb.context).decision;
  const Patch patch = a.apply_fix(ws, pa, da);
  CHECK_FALSE(patch.summary.empty());
  CHECK(code_of([&] { b.apply_fix(ws, pb, db); }) == ErrorCode::StaleWorkspace);
}

TEST_CASE("fixer context differs between ablations only by the screenshot") {
  t::TempDir dir("ablate");
  Workspace ws = workspace_with(dir, t::form_app());
  t::write_file(dir / "ws/icon.bin", std::string("\x89PNG\0\0", 6));
  DebugTrace trace;
  auto r = scripted(json{{"rules", json::array()}});
  Fixer f(*r, trace);
  const BugReport bug{"reported", "wrong fill on submit", RasterImage(4, 4), "log line\n", "push button 'submit'"};
  const Context with = f.prepare_fix(ws, bug, "inst", true).context;
  const Context without = f.prepare_fix(ws, bug, "inst", false).context;
  CHECK(with.image_count() == 1);
  CHECK(without.image_count() == 0);
  REQUIRE(with.entries.size() == without.entries.size() + 1);
  std::size_t j = 0;
  for (const auto& e : with.entries) {
    if (e.role == "bug_screenshot") continue;
    CHECK(e.role == without.entries[j].role);
    CHECK(e.text == without.entries[j].text);
    ++j;
  }
  CHECK(with.text().find("(binary)") != std::string::npos);
  CHECK(with.text().find("hint: push button 'submit'") != std::string::npos);
}

TEST_CASE("planner policy") {
  PlannerState s;
  s.max_iterations = 10;
  CHECK(plan(s, std::nullopt).kind == PlanAction::Kind::DispatchOperator);
  const BugReport bug{"reported", "wrong fill", std::nullopt, "", ""};
  const PlanAction fix = plan(s, FeedbackEntry{FeedbackEntry::Kind::Bug, "bug", bug});
  CHECK(fix.kind == PlanAction::Kind::DispatchFixer);
  CHECK(fix.bug->description == "wrong fill");
  const PlanAction verify = plan(s, FeedbackEntry{FeedbackEntry::Kind::PatchApplied, "patched", std::nullopt});
  CHECK(verify.kind == PlanAction::Kind::DispatchOperator);
  CHECK(verify.subtask.description.find("re-verify") == 0);
  CHECK(plan(s, FeedbackEntry{FeedbackEntry::Kind::FixFailed, "no", std::nullopt}).kind == PlanAction::Kind::DispatchOperator);
  CHECK(s.memory.size() == 3);
  CHECK(plan(s, FeedbackEntry{FeedbackEntry::Kind::OperatorOk, "ok", std::nullopt}).kind == PlanAction::Kind::Terminate);
  CHECK(s.iteration == 5);
  CHECK(code_of([&] { plan(s, std::nullopt); }) == ErrorCode::ReasonerError);

  PlannerState capped;
  capped.iteration = 9;
  capped.max_iterations = 10;
  CHECK(plan(capped, FeedbackEntry{FeedbackEntry::Kind::Bug, "bug", bug}).kind == PlanAction::Kind::Terminate);
  CHECK(capped.iteration == 10);

  PlannerState review;
  CHECK(plan(review, std::nullopt, nullptr, false).kind == PlanAction::Kind::DispatchFixer);
  CHECK(plan(review, FeedbackEntry{FeedbackEntry::Kind::PatchApplied, "p", std::nullopt}, nullptr, false).kind ==
        PlanAction::Kind::Terminate);

  PlannerState op_failed;
  plan(op_failed, std::nullopt);
  CHECK(plan(op_failed, FeedbackEntry{FeedbackEntry::Kind::OperatorFailed, "x", std::nullopt}).kind ==
        PlanAction::Kind::Terminate);
}

TEST_CASE("planner with a reasoner") {
  auto r = scripted(json{{"rules",
                          {{{"pattern", "patch_applied"}, {"decision", {{"type", "finish"}}}},
                           {{"pattern", "bug: "}, {"decision", {{"type", "report_bug"}, {"report", "fix it"}}}},
                           {{"pattern", "== instruction =="}, {"decision", {{"type", "plan"}, {"payload", "look"}}}}}}});
  PlannerState s;
  CHECK(plan(s, std::nullopt, r.get()).subtask.description == "look");
  const BugReport bug{"reported", "wrong fill", std::nullopt, "", ""};
  CHECK(plan(s, FeedbackEntry{FeedbackEntry::Kind::Bug, "x", bug}, r.get()).bug->description == "wrong fill");
  CHECK(plan(s, FeedbackEntry{FeedbackEntry::Kind::PatchApplied, "x", std::nullopt}, r.get()).kind ==
        PlanAction::Kind::Terminate);

  auto bad = scripted(json{{"rules", {{{"pattern", ""}, {"decision", {{"type", "interact"}, {"target", {{"name", "a"}}}, {"action", "click"}}}}}}});
  PlannerState s2;
  CHECK(code_of([&] { plan(s2, std::nullopt, bad.get()); }) == ErrorCode::ReasonerError);
}

TEST_CASE("operator reports a wrong fill and stops touching the app") {
  t::TempDir dir("op");
  const auto tasks = t::repair_tasks();
  Workspace ws = workspace_with(dir, task_named(tasks, "r02-fill-submit").broken);
  DebugTrace trace;
  auto r = scripted(t::operator_rules());
  Operator op(*r, trace);
  const OperatorResult res = op.operate({Subtask::Kind::Inspect, "check", {}}, "inst", {}, workspace_env(DriverOptions{}), ws.root());
  REQUIRE(res.bug.has_value());
  CHECK(res.bug->description == "wrong fill on submit");
  CHECK(res.bug->screenshot.has_value());
  CHECK(res.steps == 1);

  const auto events = trace.events();
  bool reported = false;
  for (const auto& e : events) {
    if (e.event == "report_bug") reported = true;
    if (reported) CHECK(e.event != "env_call");
  }
  CHECK(reported);
  CHECK(audit_trace(events).empty() == false);  // memory not yet cleared
  op.clear_session();
  CHECK(op.memory().empty());
}

TEST_CASE("operator stops at the step limit") {
  t::TempDir dir("limit");
  Workspace ws = workspace_with(dir, t::form_app());
  // A seven-step plan that never reaches a verdict within five.
  auto r = scripted(json{{"rules", {{{"pattern", "== observation =="},
                                      {"decision", {{"type", "interact"}, {"target", {{"name", "submit"}}}, {"action", "click"}}}}}}});
  Recording rec(r);
  DebugTrace trace;
  Operator op(rec, trace, 5, 4);
  const OperatorResult res = op.operate({Subtask::Kind::Inspect, "check", {}}, "inst", {}, workspace_env(DriverOptions{}), ws.root());
  REQUIRE(res.bug.has_value());
  CHECK(res.bug->kind == "step_limit");
  CHECK(res.steps == 5);
  REQUIRE(rec.seen.size() == 5);
  const std::vector<std::size_t> history = {0, 1, 2, 3, 4};
  for (std::size_t i = 0; i < 5; ++i) CHECK(rec.seen[i].count("history") == std::min<std::size_t>(history[i], 4));
  CHECK(rec.seen[4].entries.back().role == "observation");
  CHECK(rec.seen[1].text().find("action: click 'submit' -> accepted") != std::string::npos);
  CHECK(op.memory().size() == 5);

  // With a longer budget the history window slides.
  Recording longer(r);
  Operator op7(longer, trace, 7, 4);
  op7.operate({Subtask::Kind::Inspect, "check", {}}, "inst", {}, workspace_env(DriverOptions{}), ws.root());
  REQUIRE(longer.seen.size() == 7);
  const std::string last = longer.seen[6].text();
  CHECK(longer.seen[6].count("history") == 4);
  CHECK(last.find("step 2 observation") == std::string::npos);
  CHECK(last.find("step 3 observation") != std::string::npos);
  CHECK(last.find("step 6 observation") != std::string::npos);
}

TEST_CASE("operator on an app that cannot start") {
  t::TempDir dir("nostart");
  sim::AppModel m = t::form_app();
  m.crash_on_start = "missing library";
  Workspace ws = workspace_with(dir, m);
  DebugTrace trace;
  auto r = scripted(t::operator_rules());
  Operator op(*r, trace);
  const OperatorResult res = op.operate({Subtask::Kind::Inspect, "check", {}}, "inst", {}, workspace_env(DriverOptions{}), ws.root());
  REQUIRE(res.bug.has_value());
  CHECK(res.bug->kind == "failed_to_start");
  CHECK(res.bug->logs.find("missing library") != std::string::npos);
}

TEST_CASE("debug loop: faultless app terminates at iteration two") {
  t::TempDir dir("clean");
  Workspace ws = workspace_with(dir, t::form_app());
  const auto before = ws.read("app.json");
  Reasoners rs{nullptr, scripted(t::operator_rules()), scripted(json{{"rules", json::array()}})};
  const DebugResult r = run_debug_loop(ws, "inst", {}, workspace_env(DriverOptions{}), rs);
  CHECK(r.terminated);
  CHECK(r.iterations == 2);
  CHECK(r.operator_dispatches == 1);
  CHECK(r.fixer_dispatches == 0);
  CHECK(plan_actions(r.trace) == std::vector<std::string>{"operator", "terminate"});
  CHECK(ws.read("app.json") == before);
  CHECK(audit_trace(r.trace).empty());
}

TEST_CASE("debug loop repairs a wrong fill") {
  t::TempDir dir("repair");
  const auto tasks = t::repair_tasks();
  const auto& task = task_named(tasks, "r01-fill-title");
  Workspace ws = workspace_with(dir, task.broken);
  CHECK_FALSE(resolves(dir / "ws/app.json"));

  Reasoners rs{nullptr, scripted(t::operator_rules()), scripted(t::fixer_rules(task))};
  const DebugResult r = run_debug_loop(ws, t::form_metadata().instruction, {}, workspace_env(DriverOptions{}), rs);
  CHECK(plan_actions(r.trace) == std::vector<std::string>{"operator", "fixer", "operator", "terminate"});
  CHECK(r.patches_applied == 1);
  CHECK(r.iterations == 4);
  CHECK(sim::load_model(ws.read("app.json")) == task.fixed);
  CHECK(resolves(dir / "ws/app.json"));
  CHECK(audit_trace(r.trace).empty());

  // Deterministic: a second run from the same start yields the same trace.
  t::TempDir dir2("repair2");
  Workspace ws2 = workspace_with(dir2, task.broken);
  const DebugResult again = run_debug_loop(ws2, t::form_metadata().instruction, {}, workspace_env(DriverOptions{}), rs);
  CHECK(again.trace == r.trace);
}

TEST_CASE("debug loop stops at the iteration cap when no fix applies") {
  t::TempDir dir("cap");
  const auto tasks = t::repair_tasks();
  const auto& task = task_named(tasks, "r07-dead-next");
  Workspace ws = workspace_with(dir, task.broken);
  Reasoners rs{nullptr, scripted(t::operator_rules()), scripted(json{{"rules", json::array()}})};
  const DebugResult r = run_debug_loop(ws, "inst", {}, workspace_env(DriverOptions{}), rs);
  CHECK(r.terminated);
  CHECK(r.iterations == 10);
  CHECK(r.termination_reason == "iteration limit reached");
  CHECK(r.patches_applied == 0);
  CHECK_FALSE(resolves(dir / "ws/app.json"));
  CHECK(audit_trace(r.trace).empty());
}

TEST_CASE("without the operator no screenshot reaches any reasoner") {
  t::TempDir dir("textonly");
  const auto tasks = t::repair_tasks();
  const auto& task = task_named(tasks, "r05-missing-title");
  Workspace ws = workspace_with(dir, task.broken);
  write_png(dir / "ref.png", sim::render_page(*task.fixed.page("home")));
  auto op = std::make_shared<Recording>(scripted(t::operator_rules()));
  auto fx = std::make_shared<Recording>(scripted(t::fixer_rules(task)));
  DebugConfig cfg;
  cfg.ablation = Ablation::NoOperator;
  const DebugResult r = run_debug_loop(ws, "inst", {(dir / "ref.png").string()}, workspace_env(DriverOptions{}),
                                       Reasoners{nullptr, op, fx}, cfg);
  CHECK(op->seen.empty());
  REQUIRE(fx->seen.size() == 1);
  CHECK(fx->seen[0].image_count() == 0);
  CHECK(r.patches_applied == 1);
  CHECK(plan_actions(r.trace) == std::vector<std::string>{"fixer", "terminate"});
  CHECK(resolves(dir / "ws/app.json"));
}

TEST_CASE("bug screenshot ablation withholds the image from the fixer only") {
  t::TempDir dir("noshot");
  const auto tasks = t::repair_tasks();
  const auto& task = task_named(tasks, "r03-fill-next");
  Workspace ws = workspace_with(dir, task.broken);
  auto fx = std::make_shared<Recording>(scripted(t::fixer_rules(task)));
  DebugConfig cfg;
  cfg.ablation = Ablation::NoBugScreenshot;
  const DebugResult r = run_debug_loop(ws, "inst", {}, workspace_env(DriverOptions{}),
                                       Reasoners{nullptr, scripted(t::operator_rules()), fx}, cfg);
  REQUIRE(fx->seen.size() == 1);
  CHECK(fx->seen[0].image_count() == 0);
  CHECK(r.patches_applied == 1);
  CHECK(ablation_from("no-bug-screenshot") == Ablation::NoBugScreenshot);
  CHECK(code_of([] { ablation_from("no-fixer"); }) == ErrorCode::ConfigError);
}

TEST_CASE("trace jsonl round trip and audit findings") {
  DebugTrace trace;
  trace.emit("planner", "plan", {{"iteration", 1}, {"memory_size", 0}});
  trace.emit("operator", "subtask_start");
  trace.emit("operator", "step", {{"step", 1}});
  trace.emit("operator", "context", {{"history_entries", 0}, {"images", 1}, {"step", 1}});
  trace.emit("operator", "report_bug", {{"step", 1}});
  trace.emit("operator", "subtask_end");
  trace.emit("operator", "clear_session", {{"memory_size", 0}});
  const auto events = trace.events();
  CHECK(events[1].ts == 1);
  CHECK(parse_trace(trace.to_jsonl()) == events);
  CHECK(audit_trace(events).empty());

  auto broken = events;
  broken.insert(broken.begin() + 5, TraceEvent{0, "operator", "env_call", {{"call", "act"}}});
  CHECK(audit_trace(broken).size() == 1);

  broken = events;
  broken[0].payload["iteration"] = 11;
  CHECK(audit_trace(broken).size() == 1);

  broken = events;
  broken[3].payload["history_entries"] = 5;
  CHECK(audit_trace(broken).size() == 1);

  broken = events;
  broken[2].payload["step"] = 6;
  CHECK(audit_trace(broken).size() == 1);

  broken = events;
  broken[6].payload["memory_size"] = 3;
  CHECK_FALSE(audit_trace(broken).empty());

  broken = events;
  broken.pop_back();
  CHECK_FALSE(audit_trace(broken).empty());

  broken = events;
  broken.push_back(TraceEvent{0, "planner", "plan", {{"iteration", 2}, {"memory_size", 0}}});
  broken[0].payload["memory_size"] = 1;
  CHECK(audit_trace(broken).size() == 1);

  CHECK(code_of([] { parse_trace("{not json}\n"); }) == ErrorCode::SyntaxError);
}
