#include "guicheck/debug_loop.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace guicheck::agent {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kLogTail = 5;

std::string join_tail(const std::vector<std::string>& lines, std::size_t n) {
  std::string out;
  for (std::size_t i = lines.size() > n ? lines.size() - n : 0; i < lines.size(); ++i) out += lines[i] + "\n";
  return out;
}

std::string bounds_text(const Bounds& b) {
  return "[" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," + std::to_string(b.h) + "]";
}

// Tree dump with the on-screen color of every node, so text-only rules can
// reason about rendering.
void describe_node(const AccessibilityNode& n, const RasterImage& shot, int depth, std::string& out) {
  out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + n.role + " '" + n.name + "' " + bounds_text(n.bounds);
  const RasterImage region = shot.crop(n.bounds);
  if (!region.empty()) out += " fill=" + to_hex(dominant_color(region));
  for (auto s : n.states) out += " " + std::string(to_string(s));
  if (n.value) out += " value=\"" + *n.value + "\"";
  out += "\n";
  for (const auto& c : n.children) describe_node(c, shot, depth + 1, out);
}

std::string action_text(const Decision& d) {
  std::string out = d.action ? std::string(to_string(*d.action)) : "act";
  if (d.target) out += " " + describe(*d.target);
  if (!d.payload.empty()) out += " \"" + d.payload + "\"";
  return out;
}

nlohmann::ordered_json usage_json(Agent agent, const eval::Usage& u) {
  return {{"agent", std::string(to_string(agent))},
          {"model", u.model},
          {"prompt_tokens", u.prompt_tokens},
          {"completion_tokens", u.completion_tokens}};
}

bool looks_binary(const std::string& s) { return s.find('\0') != std::string::npos; }

}  // namespace

std::string_view to_string(FeedbackEntry::Kind k) {
  switch (k) {
    case FeedbackEntry::Kind::OperatorOk: return "operator_ok";
    case FeedbackEntry::Kind::Bug: return "bug";
    case FeedbackEntry::Kind::PatchApplied: return "patch_applied";
    case FeedbackEntry::Kind::FixFailed: return "fix_failed";
    case FeedbackEntry::Kind::OperatorFailed: return "operator_failed";
  }
  return "unknown";
}

std::string_view to_string(PlanAction::Kind k) {
  switch (k) {
    case PlanAction::Kind::DispatchOperator: return "operator";
    case PlanAction::Kind::DispatchFixer: return "fixer";
    case PlanAction::Kind::Terminate: return "terminate";
  }
  return "unknown";
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::NoOperator: return "no-operator";
    case Ablation::NoBugScreenshot: return "no-bug-screenshot";
  }
  return "unknown";
}

Ablation ablation_from(std::string_view s) {
  for (auto a : {Ablation::None, Ablation::NoOperator, Ablation::NoBugScreenshot}) {
    if (to_string(a) == s) return a;
  }
  fail(ErrorCode::ConfigError, "unknown ablation '" + std::string(s) + "'");
}

PlanAction plan(PlannerState& state, std::optional<FeedbackEntry> feedback, Reasoner* reasoner, bool operator_enabled,
                eval::Usage* usage) {
  if (state.done) fail(ErrorCode::ReasonerError, "planner already terminated");
  const bool first = state.memory.empty() && !feedback;
  if (feedback) state.memory.push_back(*feedback);
  state.iteration = std::min(state.iteration + 1, state.max_iterations);

  PlanAction action;
  auto terminate = [&](std::string reason) {
    state.done = true;
    action.kind = PlanAction::Kind::Terminate;
    action.reason = std::move(reason);
    return action;
  };
  auto inspect = [&](std::string description) {
    action.kind = PlanAction::Kind::DispatchOperator;
    action.subtask = {Subtask::Kind::Inspect, std::move(description), {}};
    return action;
  };
  auto repair = [&](std::optional<BugReport> bug) {
    action.kind = PlanAction::Kind::DispatchFixer;
    action.subtask = {Subtask::Kind::Fix, bug ? bug->description : "review the source against the instruction", {}};
    action.bug = std::move(bug);
    return action;
  };

  if (state.iteration >= state.max_iterations) return terminate("iteration limit reached");

  if (reasoner) {
    Context ctx;
    ctx.agent = Agent::Planner;
    ctx.entries.push_back({"instruction", state.instruction, std::nullopt});
    for (const auto& m : state.memory) ctx.entries.push_back({"memory", std::string(to_string(m.kind)) + ": " + m.text, std::nullopt});
    Proposal p = reasoner->propose(ctx);
    if (usage) *usage = p.usage;
    switch (p.decision.type) {
      case DecisionType::Plan:
        if (!operator_enabled) return repair(std::nullopt);
        return inspect(p.decision.payload.empty() ? "verify the running application" : p.decision.payload);
      case DecisionType::ReportBug: {
        std::optional<BugReport> bug;
        if (!state.memory.empty() && state.memory.back().bug) bug = state.memory.back().bug;
        if (!bug) bug = BugReport{"reported", p.decision.report, std::nullopt, {}, {}};
        return repair(std::move(bug));
      }
      case DecisionType::Finish: return terminate(p.decision.report.empty() ? "planner finished" : p.decision.report);
      default: fail(ErrorCode::ReasonerError, "planner cannot act on a '" + std::string(to_string(p.decision.type)) + "' decision");
    }
  }

  if (!operator_enabled) {
    if (first) return repair(std::nullopt);
    return terminate("text-only review complete");
  }
  if (first) return inspect("launch the application and check it against the instruction");
  switch (feedback ? feedback->kind : FeedbackEntry::Kind::OperatorOk) {
    case FeedbackEntry::Kind::Bug: return repair(feedback->bug);
    case FeedbackEntry::Kind::PatchApplied: return inspect("re-verify after patch: " + feedback->text);
    case FeedbackEntry::Kind::FixFailed: return inspect("re-inspect after failed fix");
    case FeedbackEntry::Kind::OperatorOk: return terminate("operator verified the application");
    case FeedbackEntry::Kind::OperatorFailed: return terminate("operator could not proceed: " + feedback->text);
  }
  return terminate("no feedback");
}

EnvFactory workspace_env(DriverOptions options) {
  return [options](const fs::path& workspace) -> std::unique_ptr<Session> {
    const fs::path launch_json = workspace / "launch.json";
    if (fs::exists(launch_json)) {
      std::ifstream in(launch_json);
      std::stringstream buf;
      buf << in.rdbuf();
      try {
        return launch(parse_launch_descriptor(buf.str(), workspace), options);
      } catch (const Error& e) {
        fail(ErrorCode::LaunchFailed, e.what());
      }
    }
    return launch(SimLaunch{workspace / "app.json"}, options);
  };
}

Operator::Operator(Reasoner& reasoner, DebugTrace& trace, int max_steps, int history_window)
    : reasoner_(reasoner), trace_(trace), max_steps_(max_steps), history_window_(history_window) {}

void Operator::clear_session() { history_.clear(); }

std::vector<eval::Usage> Operator::take_usage() { return std::exchange(usage_, {}); }

OperatorResult Operator::operate(const Subtask& subtask, const std::string& instruction,
                                 const std::vector<RasterImage>& references, const EnvFactory& env,
                                 const fs::path& workspace) {
  OperatorResult result;
  trace_.emit("operator", "subtask_start", {{"description", subtask.description}});
  auto env_call = [&](const char* call) { trace_.emit("operator", "env_call", {{"call", call}}); };
  auto finish = [&](const char* outcome) {
    trace_.emit("operator", "subtask_end", {{"steps", result.steps}, {"outcome", outcome}});
    return result;
  };

  env_call("launch");
  std::unique_ptr<Session> session;
  try {
    session = env(workspace);
  } catch (const std::exception& e) {
    result.bug = BugReport{"failed_to_start", "application failed to start", std::nullopt, e.what(), {}};
    trace_.emit("operator", "bug", {{"kind", "failed_to_start"}});
    return finish("bug");
  }
  if (session->status() != SessionStatus::Running) {
    std::string logs;
    for (const auto& l : session->logs()) logs += l + "\n";
    result.bug = BugReport{"failed_to_start", "application failed to start", std::nullopt, logs, {}};
    trace_.emit("operator", "bug", {{"kind", "failed_to_start"}});
    return finish("bug");
  }

  std::optional<RasterImage> last_shot;
  std::string last_logs;
  try {
    for (int step = 1; step <= max_steps_; ++step) {
      result.steps = step;
      trace_.emit("operator", "step", {{"step", step}});
      env_call("snapshot");
      const AccessibilityNode tree = session->snapshot_tree();
      env_call("screenshot");
      const RasterImage shot = session->screenshot();
      env_call("logs");
      last_logs = join_tail(session->logs(), kLogTail);
      last_shot = shot;

      std::string observation = "page: " + tree.name + "\n";
      describe_node(tree, shot, 0, observation);
      observation += "log tail:\n" + (last_logs.empty() ? std::string("(empty)\n") : last_logs);

      Context ctx;
      ctx.agent = Agent::Operator;
      ctx.entries.push_back({"instruction", instruction + "\nsubtask: " + subtask.description, std::nullopt});
      for (std::size_t i = 0; i < references.size(); ++i) {
        ctx.entries.push_back({"reference", "reference screenshot " + std::to_string(i + 1), references[i]});
      }
      const std::size_t window = static_cast<std::size_t>(history_window_);
      const std::size_t from = history_.size() > window ? history_.size() - window : 0;
      for (std::size_t i = from; i < history_.size(); ++i) {
        ctx.entries.push_back({"history", history_[i].text, history_[i].screenshot});
      }
      ctx.entries.push_back({"observation", observation, shot});
      trace_.emit("operator", "context",
                  {{"history_entries", ctx.count("history")}, {"images", ctx.image_count()}, {"step", step}});

      Proposal p = reasoner_.propose(ctx);
      usage_.push_back(p.usage);
      trace_.emit("operator", "decision", {{"step", step}, {"decision", to_json(p.decision)}});
      trace_.emit("operator", "usage", usage_json(Agent::Operator, p.usage));

      const Decision& d = p.decision;
      if (d.type == DecisionType::ReportBug) {
        env_call("terminate");
        session->terminate();
        result.bug = BugReport{"reported", d.report, shot, last_logs, d.target ? describe(*d.target) : std::string{}};
        trace_.emit("operator", "report_bug", {{"step", step}, {"report", d.report}});
        return finish("bug");
      }
      if (d.type == DecisionType::Finish) {
        env_call("terminate");
        session->terminate();
        result.ok = true;
        trace_.emit("operator", "finish", {{"step", step}});
        return finish("ok");
      }
      if (d.type != DecisionType::Interact) {
        fail(ErrorCode::ReasonerError, "operator cannot act on a '" + std::string(to_string(d.type)) + "' decision");
      }

      std::string outcome;
      try {
        const FindResult found = find(tree, *d.target);
        env_call("act");
        const ActOutcome r = session->act(*found.node, Action{*d.action, d.payload});
        outcome = r.accepted ? "accepted" : "rejected (" + std::string(to_string(r.reason)) + ")";
      } catch (const Error& e) {
        if (e.code() == ErrorCode::SessionDead) throw;
        outcome = std::string("failed: ") + e.what();
      }
      history_.push_back({"step " + std::to_string(step) + " observation:\n" + observation + "action: " + action_text(d) +
                              " -> " + outcome + "\n",
                          shot});
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SessionDead) {
      result.bug = BugReport{"crashed", std::string("application stopped responding: ") + e.what(), last_shot, last_logs, {}};
      trace_.emit("operator", "bug", {{"kind", "crashed"}});
      return finish("bug");
    }
    env_call("terminate");
    session->terminate();
    result.error = e.what();
    trace_.emit("operator", "error", {{"message", result.error}});
    return finish("error");
  }

  env_call("terminate");
  session->terminate();
  result.bug = BugReport{"step_limit", "no verdict within " + std::to_string(max_steps_) + " steps", last_shot, last_logs, {}};
  trace_.emit("operator", "bug", {{"kind", "step_limit"}});
  return finish("bug");
}

Fixer::Fixer(Reasoner& reasoner, DebugTrace& trace) : reasoner_(reasoner), trace_(trace) {}

void Fixer::clear_session() { memory_.reset(); }

std::vector<eval::Usage> Fixer::take_usage() { return std::exchange(usage_, {}); }

PreparedFix Fixer::prepare_fix(const Workspace& ws, const BugReport& bug, const std::string& instruction,
                               bool include_screenshot) const {
  PreparedFix out;
  out.context.agent = Agent::Fixer;
  out.context.entries.push_back({"instruction", instruction, std::nullopt});
  std::string bug_text = "kind: " + bug.kind + "\n" + bug.description + "\n";
  if (!bug.hint.empty()) bug_text += "hint: " + bug.hint + "\n";
  out.context.entries.push_back({"bug", bug_text, std::nullopt});
  out.context.entries.push_back({"logs", bug.logs.empty() ? "(empty)" : bug.logs, std::nullopt});
  if (include_screenshot && bug.screenshot) {
    out.context.entries.push_back({"bug_screenshot", "screen at the time of the report", *bug.screenshot});
  }
  for (const auto& path : ws.files()) {
    const std::string content = ws.read(path);
    const std::string hash = fnv1a_hex(content);
    out.hashes[path] = hash;
    out.context.entries.push_back(
        {"file", "path: " + path + "\nhash: " + hash + "\n" + (looks_binary(content) ? "(binary)\n" : content), std::nullopt});
  }
  return out;
}

Patch Fixer::apply_fix(Workspace& ws, const PreparedFix& prepared, const Decision& decision) const {
  if (decision.type != DecisionType::Edit) {
    fail(ErrorCode::ReasonerError, "fixer expected an edit decision, got '" + std::string(to_string(decision.type)) + "'");
  }
  Patch patch;
  std::string paths;
  for (const auto& e : decision.edits) {
    auto it = prepared.hashes.find(e.path);
    if (it == prepared.hashes.end()) fail(ErrorCode::ReasonerError, "edit of unknown file '" + e.path + "'");
    patch.file_edits.push_back({e.path, it->second, e.content});
    paths += (paths.empty() ? "" : ", ") + e.path;
  }
  ws.apply(patch.file_edits);
  patch.summary = decision.report.empty() ? "updated " + paths : decision.report;
  return patch;
}

Patch Fixer::fix(Workspace& ws, const BugReport& bug, const std::string& instruction, bool include_screenshot) {
  trace_.emit("fixer", "subtask_start", {{"bug", bug.description}});
  try {
    PreparedFix prepared = prepare_fix(ws, bug, instruction, include_screenshot);
    memory_ = prepared.context;
    trace_.emit("fixer", "context", {{"images", prepared.context.image_count()}, {"files", prepared.hashes.size()}});
    Proposal p = reasoner_.propose(prepared.context);
    usage_.push_back(p.usage);
    nlohmann::ordered_json summary = to_json(p.decision);
    if (summary.contains("edits")) {
      for (auto& e : summary["edits"]) e["content"] = fnv1a_hex(e["content"].get<std::string>());
    }
    trace_.emit("fixer", "decision", {{"decision", summary}});
    trace_.emit("fixer", "usage", usage_json(Agent::Fixer, p.usage));
    Patch patch = apply_fix(ws, prepared, p.decision);
    auto paths = nlohmann::ordered_json::array();
    for (const auto& e : patch.file_edits) paths.push_back(e.path);
    trace_.emit("fixer", "patch", {{"paths", paths}, {"summary", patch.summary}});
    trace_.emit("fixer", "subtask_end", {{"outcome", "patched"}});
    return patch;
  } catch (const Error& e) {
    trace_.emit("fixer", "error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}});
    trace_.emit("fixer", "subtask_end", {{"outcome", "error"}});
    throw;
  }
}

DebugResult run_debug_loop(Workspace& ws, const std::string& instruction, const std::vector<std::string>& screenshots,
                           const EnvFactory& env, const Reasoners& reasoners, const DebugConfig& config,
                           DebugTrace* external) {
  DebugTrace local;
  DebugTrace& trace = external ? *external : local;
  DebugResult result;
  if (!reasoners.operator_ || !reasoners.fixer) fail(ErrorCode::ConfigError, "operator and fixer reasoners are required");

  const bool operator_enabled = config.ablation != Ablation::NoOperator;
  trace.emit("loop", "start", {{"ablation", std::string(to_string(config.ablation))}, {"instruction", instruction}});

  std::vector<RasterImage> references;
  if (operator_enabled) {
    for (const auto& s : screenshots) {
      try {
        references.push_back(read_png(s));
      } catch (const Error& e) {
        trace.emit("loop", "warning", {{"message", e.what()}});
      }
    }
  }

  Operator op(*reasoners.operator_, trace, config.operator_max, config.history_window);
  Fixer fixer(*reasoners.fixer, trace);
  PlannerState state{instruction, screenshots, {}, 0, config.planner_max, false};
  std::optional<FeedbackEntry> feedback;

  while (true) {
    PlanAction action;
    try {
      eval::Usage usage;
      action = plan(state, feedback, reasoners.planner.get(), operator_enabled, &usage);
      if (reasoners.planner) {
        result.usage.push_back(usage);
        trace.emit("planner", "usage", usage_json(Agent::Planner, usage));
      }
    } catch (const Error& e) {
      trace.emit("planner", "error", {{"message", e.what()}});
      result.termination_reason = e.what();
      break;
    }
    feedback.reset();
    trace.emit("planner", "plan",
               {{"iteration", state.iteration},
                {"memory_size", state.memory.size()},
                {"action", std::string(to_string(action.kind))},
                {"subtask", action.subtask.description},
                {"reason", action.reason}});

    if (action.kind == PlanAction::Kind::Terminate) {
      result.terminated = true;
      result.termination_reason = action.reason;
      break;
    }

    if (action.kind == PlanAction::Kind::DispatchOperator) {
      ++result.operator_dispatches;
      OperatorResult r = op.operate(action.subtask, instruction, references, env, ws.root());
      op.clear_session();
      trace.emit("operator", "clear_session", {{"memory_size", op.memory().size()}});
      for (auto& u : op.take_usage()) result.usage.push_back(std::move(u));
      if (r.ok) {
        feedback = FeedbackEntry{FeedbackEntry::Kind::OperatorOk, "no defect found in " + std::to_string(r.steps) + " steps", std::nullopt};
      } else if (r.bug) {
        feedback = FeedbackEntry{FeedbackEntry::Kind::Bug, r.bug->kind + ": " + r.bug->description, r.bug};
      } else {
        feedback = FeedbackEntry{FeedbackEntry::Kind::OperatorFailed, r.error, std::nullopt};
      }
      continue;
    }

    ++result.fixer_dispatches;
    BugReport bug;
    if (action.bug) {
      bug = *action.bug;
    } else {
      // Text-only review: instruction plus whatever a headless launch prints.
      std::string logs;
      try {
        trace.emit("loop", "env_call", {{"call", "headless_launch"}});
        auto session = env(ws.root());
        logs = "status: " + std::string(to_string(session->status())) + "\n";
        for (const auto& l : session->logs()) logs += l + "\n";
        session->terminate();
      } catch (const std::exception& e) {
        logs = std::string("launch error: ") + e.what() + "\n";
      }
      bug = BugReport{"review", "review the source against the instruction", std::nullopt, logs, {}};
    }
    try {
      Patch patch = fixer.fix(ws, bug, instruction, config.ablation == Ablation::None);
      ++result.patches_applied;
      feedback = FeedbackEntry{FeedbackEntry::Kind::PatchApplied, patch.summary, std::nullopt};
    } catch (const Error& e) {
      feedback = FeedbackEntry{FeedbackEntry::Kind::FixFailed, e.what(), std::nullopt};
    }
    fixer.clear_session();
    trace.emit("fixer", "clear_session", {{"memory_size", fixer.memory() ? 1 : 0}});
    for (auto& u : fixer.take_usage()) result.usage.push_back(std::move(u));
  }

  result.iterations = state.iteration;
  trace.emit("loop", "end",
             {{"iterations", result.iterations},
              {"terminated", result.terminated},
              {"reason", result.termination_reason},
              {"patches", result.patches_applied}});
  result.trace = trace.events();
  return result;
}

}  // namespace guicheck::agent
