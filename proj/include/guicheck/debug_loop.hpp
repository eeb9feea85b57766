#pragma once

// Planner / operator / fixer loop that repairs a candidate GUI program.

#include "guicheck/driver.hpp"
#include "guicheck/reasoner.hpp"
#include "guicheck/trace.hpp"
#include "guicheck/workspace.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace guicheck::agent {

struct Subtask {
  enum class Kind { Inspect, Fix };
  Kind kind = Kind::Inspect;
  std::string description;
  std::string target;  // optional page, widget or file hint
};

struct BugReport {
  std::string kind;  // reported, step_limit, failed_to_start, review
  std::string description;
  std::optional<RasterImage> screenshot;
  std::string logs;
  std::string hint;
};

struct Patch {
  std::vector<HashedEdit> file_edits;
  std::string summary;
};

struct FeedbackEntry {
  enum class Kind { OperatorOk, Bug, PatchApplied, FixFailed, OperatorFailed };
  Kind kind = Kind::OperatorOk;
  std::string text;
  std::optional<BugReport> bug;
};

std::string_view to_string(FeedbackEntry::Kind k);

struct PlannerState {
  std::string instruction;
  std::vector<std::string> screenshots;  // reference screenshot paths
  std::vector<FeedbackEntry> memory;     // append-only
  int iteration = 0;
  int max_iterations = 10;
  bool done = false;
};

struct PlanAction {
  enum class Kind { DispatchOperator, DispatchFixer, Terminate };
  Kind kind = Kind::Terminate;
  Subtask subtask;
  std::optional<BugReport> bug;  // for DispatchFixer; a review bug is built by the loop when unset
  std::string reason;
};

std::string_view to_string(PlanAction::Kind k);

enum class Ablation { None, NoOperator, NoBugScreenshot };

std::string_view to_string(Ablation a);
Ablation ablation_from(std::string_view s);  // throws ConfigError

/// One planning step: appends feedback, increments the iteration and picks
/// the next dispatch. Without a reasoner a fixed policy applies:
///   first call -> operator inspection; bug -> fixer; patch -> operator
///   re-verification; operator ok -> terminate; failed fix -> operator.
/// With operator_enabled=false the first call goes to the fixer and every
/// later call terminates. Reaching max_iterations always terminates.
/// A planner reasoner maps plan -> operator, report_bug -> fixer and
/// finish -> terminate; other decisions raise ReasonerError.
PlanAction plan(PlannerState& state, std::optional<FeedbackEntry> feedback, Reasoner* reasoner = nullptr,
                bool operator_enabled = true, eval::Usage* usage = nullptr);

using EnvFactory = std::function<std::unique_ptr<Session>(const std::filesystem::path& workspace)>;

/// Launches launch.json when present, otherwise app.json as a simulator model.
EnvFactory workspace_env(DriverOptions options = default_driver_options());

struct OperatorResult {
  bool ok = false;
  std::optional<BugReport> bug;
  std::string error;  // reasoner failure; neither ok nor bug
  int steps = 0;
};

struct HistoryEntry {
  std::string text;
  std::optional<RasterImage> screenshot;
};

class Operator {
public:
  Operator(Reasoner& reasoner, DebugTrace& trace, int max_steps = 5, int history_window = 4);

  OperatorResult operate(const Subtask& subtask, const std::string& instruction,
                         const std::vector<RasterImage>& references, const EnvFactory& env,
                         const std::filesystem::path& workspace);

  void clear_session();
  const std::vector<HistoryEntry>& memory() const { return history_; }
  std::vector<eval::Usage> take_usage();

private:
  Reasoner& reasoner_;
  DebugTrace& trace_;
  int max_steps_;
  int history_window_;
  std::vector<HistoryEntry> history_;
  std::vector<eval::Usage> usage_;
};

struct PreparedFix {
  Context context;
  std::map<std::string, std::string> hashes;  // path -> hash at read time
};

class Fixer {
public:
  Fixer(Reasoner& reasoner, DebugTrace& trace);

  PreparedFix prepare_fix(const Workspace& ws, const BugReport& bug, const std::string& instruction,
                          bool include_screenshot) const;
  /// Throws ReasonerError unless the decision is an edit, StaleWorkspace on hash mismatch.
  Patch apply_fix(Workspace& ws, const PreparedFix& prepared, const Decision& decision) const;

  /// prepare, propose, apply. The context stays in memory until clear_session.
  Patch fix(Workspace& ws, const BugReport& bug, const std::string& instruction, bool include_screenshot);

  void clear_session();
  const std::optional<Context>& memory() const { return memory_; }
  std::vector<eval::Usage> take_usage();

private:
  Reasoner& reasoner_;
  DebugTrace& trace_;
  std::optional<Context> memory_;
  std::vector<eval::Usage> usage_;
};

struct Reasoners {
  std::shared_ptr<Reasoner> planner;  // optional; fixed policy when null
  std::shared_ptr<Reasoner> operator_;
  std::shared_ptr<Reasoner> fixer;
};

struct DebugConfig {
  int planner_max = 10;
  int operator_max = 5;
  int history_window = 4;
  Ablation ablation = Ablation::None;
};

struct DebugResult {
  int iterations = 0;
  bool terminated = false;  // planner reached Terminate
  std::string termination_reason;
  int operator_dispatches = 0;
  int fixer_dispatches = 0;
  int patches_applied = 0;
  std::vector<eval::Usage> usage;
  std::vector<TraceEvent> trace;
};

/// Drives plan / operate / fix / clear_session until the planner terminates.
/// Errors become trace events; the workspace is modified in place.
DebugResult run_debug_loop(Workspace& ws, const std::string& instruction, const std::vector<std::string>& screenshots,
                           const EnvFactory& env, const Reasoners& reasoners, const DebugConfig& config = {},
                           DebugTrace* trace = nullptr);

}  // namespace guicheck::agent
