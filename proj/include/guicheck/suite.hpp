#pragma once

// Batch evaluation of a suite directory:
//   <suite>/<task_id>/{ies.yaml, meta.yaml, app.json | launch.json, screens/*.png}
// An optional <task_id>/debug_trace.jsonl supplies token usage for the cost column.

#include "guicheck/evaluator.hpp"
#include "guicheck/layout_score.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace guicheck {

struct Config {
  double fs_timeout_s = 10.0;
  std::optional<double> layout_gate;
  layout::PenaltyWeights penalty_weights;
  eval::PriceTable price_table;
  int planner_max = 10;
  int operator_max = 5;
  int history_window = 4;
  int workers = 1;
};

/// Keys mirror the struct; price_table is {model: {in, out}}, penalty_weights
/// is {deletion, shift, collapse, style}. Throws ConfigError.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
void check_config(const Config& c);

using ScorerFactory = std::function<std::unique_ptr<layout::Scorer>()>;

struct RunOptions {
  Backend backend = Backend::Sim;
  ScorerFactory scorer = [] { return std::make_unique<layout::GridScorer>(); };
  Config config;
  DriverOptions driver;
};

struct SuiteResult {
  eval::SuiteReport suite;
  std::vector<eval::TaskReport> tasks;  // sorted by task_id
};

/// Task directories in name order. Throws IoError when the suite directory is
/// missing or holds no task with an ies.yaml.
std::vector<std::filesystem::path> discover_tasks(const std::filesystem::path& suite_dir);

/// Never throws: setup problems become a fail-to-start report with a reason.
eval::TaskReport evaluate_task_dir(const std::filesystem::path& task_dir, layout::Scorer& scorer, const RunOptions& options);

/// Sum of usage events in a debug trace, priced with the table.
double trace_cost(const std::filesystem::path& trace_path, const eval::PriceTable& prices);

/// Evaluates every task on a pool of config.workers threads; each worker owns its scorer.
SuiteResult run_suite(const std::filesystem::path& suite_dir, const RunOptions& options);

/// suite.json, suite.csv, suite.md and tasks/<task_id>.json under out_dir.
void write_reports(const SuiteResult& result, const std::filesystem::path& out_dir);

}  // namespace guicheck
