#include "guicheck/trace.hpp"

#include "guicheck/error.hpp"

#include <sstream>

namespace guicheck::agent {

void DebugTrace::emit(std::string actor, std::string event, nlohmann::ordered_json payload) {
  std::lock_guard lock(mu_);
  const long ts = static_cast<long>(events_.size());
  events_.push_back({ts, std::move(actor), std::move(event), std::move(payload)});
}

std::vector<TraceEvent> DebugTrace::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::string DebugTrace::to_jsonl() const {
  std::ostringstream out;
  for (const auto& e : events()) {
    nlohmann::ordered_json j;
    j["ts"] = e.ts;
    j["actor"] = e.actor;
    j["event"] = e.event;
    j["payload"] = e.payload;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<TraceEvent> parse_trace(std::string_view jsonl) {
  std::vector<TraceEvent> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::ordered_json::parse(line);
      out.push_back({j.at("ts").get<long>(), j.at("actor").get<std::string>(), j.at("event").get<std::string>(),
                     j.at("payload")});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::SyntaxError, std::string("trace line: ") + e.what());
    }
  }
  return out;
}

std::vector<std::string> audit_trace(const std::vector<TraceEvent>& events, const TraceLimits& limits) {
  std::vector<std::string> problems;
  auto report = [&](const TraceEvent& e, const std::string& msg) {
    problems.push_back("ts " + std::to_string(e.ts) + ": " + msg);
  };

  bool in_operator = false, in_fixer = false, reported = false;
  bool operator_needs_clear = false, fixer_needs_clear = false;
  long planner_memory = -1;

  for (const auto& e : events) {
    if (e.actor == "planner") {
      if (e.event == "plan") {
        const int it = e.payload.value("iteration", 0);
        if (it > limits.planner_max) report(e, "planner iteration " + std::to_string(it) + " exceeds cap");
        const long mem = e.payload.value("memory_size", 0L);
        if (mem < planner_memory) report(e, "planner memory shrank");
        planner_memory = mem;
        if (operator_needs_clear) report(e, "operator memory not cleared before planning");
        if (fixer_needs_clear) report(e, "fixer memory not cleared before planning");
      }
    } else if (e.actor == "operator") {
      if (e.event == "subtask_start") {
        in_operator = true;
        reported = false;
      } else if (e.event == "subtask_end") {
        in_operator = false;
        operator_needs_clear = true;
      } else if (e.event == "clear_session") {
        if (e.payload.value("memory_size", -1) != 0) report(e, "operator memory not empty after clear");
        operator_needs_clear = false;
      } else if (e.event == "env_call") {
        if (reported) report(e, "operator environment call after report_bug");
      } else if (e.event == "report_bug") {
        reported = true;
      } else if (e.event == "step") {
        const int step = e.payload.value("step", 0);
        if (step > limits.operator_max) report(e, "operator step " + std::to_string(step) + " exceeds cap");
      } else if (e.event == "context") {
        const int history = e.payload.value("history_entries", 0);
        if (history > limits.history_window) report(e, "operator context holds " + std::to_string(history) + " entries");
      }
      if (!in_operator && (e.event == "env_call" || e.event == "step")) report(e, "operator activity outside a subtask");
    } else if (e.actor == "fixer") {
      if (e.event == "subtask_start") {
        in_fixer = true;
      } else if (e.event == "subtask_end") {
        in_fixer = false;
        fixer_needs_clear = true;
      } else if (e.event == "clear_session") {
        if (e.payload.value("memory_size", -1) != 0) report(e, "fixer memory not empty after clear");
        fixer_needs_clear = false;
      }
    }
  }
  if (in_operator || in_fixer) problems.push_back("trace ends inside a subtask");
  if (operator_needs_clear || fixer_needs_clear) problems.push_back("trace ends with uncleared agent memory");
  return problems;
}

}  // namespace guicheck::agent
