#pragma once

// Runs an evaluation script against a live session, judges every step, and
// aggregates benchmark metrics over a suite.

#include "guicheck/driver.hpp"
#include "guicheck/ies.hpp"
#include "guicheck/layout_score.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace guicheck::eval {

enum class StepStatus { Pass, Fail, Scored, Unattempted };

std::string_view to_string(StepStatus s);

struct StepOutcome {
  std::size_t index = 0;
  ies::StepKind kind = ies::StepKind::AssertElement;
  StepStatus status = StepStatus::Unattempted;
  std::string reason;          // set for Fail and Unattempted
  std::optional<double> score; // AssertLayout only; kept when a layout gate turns it into Fail

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct TaskReport {
  std::string task_id;
  bool fs = false;
  bool resolved = false;
  double visual_score = 0.0;
  double cost = 0.0;
  std::vector<StepOutcome> outcomes;
  std::string error;  // task could not be set up (unreadable script, bad launch spec)

  friend bool operator==(const TaskReport&, const TaskReport&) = default;
};

struct SuiteReport {
  double resolved_pct = 0.0;
  double fs_pct = 0.0;
  double ae = 0.0;
  double ac = 0.0;
  double ck = 0.0;
  double avg_visual = 0.0;
  double avg_cost = 0.0;
  std::size_t n_tasks = 0;

  friend bool operator==(const SuiteReport&, const SuiteReport&) = default;
};

struct EvalConfig {
  /// When set, an AssertLayout score below the gate is a Fail.
  std::optional<double> layout_gate;
};

/// Resolves an assert_layout reference to the expected screenshot.
using ScreenLoader = std::function<RasterImage(const std::string& ref)>;

/// Loads PNGs relative to base_dir; throws IoError for missing files.
ScreenLoader screen_loader(const std::filesystem::path& base_dir);

/// Judges one step on a running session. Throws SessionDead when the session
/// is gone; every other failure is encoded in the outcome.
StepOutcome exec_step(Session& session, const ies::Step& step, std::size_t index, layout::Scorer& scorer,
                      const ScreenLoader& screens, const EvalConfig& config = {});

/// One launch, every step in order, session terminated at the end. Never throws.
TaskReport run_task(const ies::Script& script, const SessionFactory& factory, layout::Scorer& scorer,
                    const ScreenLoader& screens, const EvalConfig& config = {});

/// True when the outcome counts as passing for resolution purposes.
bool gating_ok(const StepOutcome& outcome);

/// Order-independent. Percentages in [0,100]; a metric whose operation kind
/// never occurs in the suite is 0. Throws EmptyInput for no reports.
SuiteReport aggregate(std::span<const TaskReport> reports);

struct Price {
  double in = 0.0;   // per 1k prompt tokens
  double out = 0.0;  // per 1k completion tokens
};

using PriceTable = std::map<std::string, Price>;

struct Usage {
  std::string model;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

/// Throws ConfigError for a model missing from the table (unless it used no tokens).
double cost_of(std::span<const Usage> usages, const PriceTable& prices);

enum class ReportFormat { Json, Csv, Md };

/// Deterministic: tasks are emitted sorted by task_id.
std::string emit_report(const SuiteReport& suite, std::span<const TaskReport> tasks, ReportFormat format);

nlohmann::ordered_json to_json(const StepOutcome& o);
nlohmann::ordered_json to_json(const TaskReport& t);
nlohmann::ordered_json to_json(const SuiteReport& s);
StepOutcome step_outcome_from_json(const nlohmann::json& j);
TaskReport task_report_from_json(const nlohmann::json& j);
SuiteReport suite_report_from_json(const nlohmann::json& j);

struct ParsedReport {
  SuiteReport suite;
  std::vector<TaskReport> tasks;
};

/// Inverse of emit_report(..., Json). Throws SyntaxError.
ParsedReport parse_report_json(std::string_view text);

}  // namespace guicheck::eval
