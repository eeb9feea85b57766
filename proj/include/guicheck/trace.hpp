#pragma once

#include <nlohmann/json.hpp>

#include <mutex>
#include <string>
#include <vector>

namespace guicheck::agent {

/// ts is a logical counter, so traces of deterministic runs compare equal.
struct TraceEvent {
  long ts = 0;
  std::string actor;
  std::string event;
  nlohmann::ordered_json payload;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

class DebugTrace {
public:
  void emit(std::string actor, std::string event, nlohmann::ordered_json payload = nlohmann::ordered_json::object());

  std::vector<TraceEvent> events() const;
  std::string to_jsonl() const;

private:
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

std::vector<TraceEvent> parse_trace(std::string_view jsonl);

struct TraceLimits {
  int planner_max = 10;
  int operator_max = 5;
  int history_window = 4;
};

/// Checks a trace against the loop's limits and memory rules:
///  - every plan iteration is <= planner_max;
///  - per operator subtask, steps <= operator_max and context history <= history_window;
///  - no operator environment call after report_bug within the same subtask;
///  - operator and fixer memories are empty after every clear_session, and each
///    subtask ends with one;
///  - planner memory size never shrinks.
/// Returns one message per violation; empty means the trace is clean.
std::vector<std::string> audit_trace(const std::vector<TraceEvent>& events, const TraceLimits& limits = {});

}  // namespace guicheck::agent
