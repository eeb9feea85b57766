#include "guicheck/suite.hpp"

#include "guicheck/error.hpp"
#include "guicheck/trace.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace guicheck {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "_" : out;
}

}  // namespace

Config config_from_json(const nlohmann::json& j) {
  Config c;
  try {
    if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be an object");
    static const std::set<std::string> kKeys = {"fs_timeout_s", "layout_gate",  "penalty_weights", "price_table",
                                                "planner_max",  "operator_max", "history_window",  "workers"};
    for (const auto& [key, _] : j.items()) {
      if (!kKeys.count(key)) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
    c.fs_timeout_s = j.value("fs_timeout_s", c.fs_timeout_s);
    if (j.contains("layout_gate") && !j["layout_gate"].is_null()) c.layout_gate = j["layout_gate"].get<double>();
    if (j.contains("penalty_weights")) {
      const auto& w = j["penalty_weights"];
      c.penalty_weights.deletion = w.value("deletion", c.penalty_weights.deletion);
      c.penalty_weights.shift = w.value("shift", c.penalty_weights.shift);
      c.penalty_weights.collapse = w.value("collapse", c.penalty_weights.collapse);
      c.penalty_weights.style = w.value("style", c.penalty_weights.style);
    }
    if (j.contains("price_table")) {
      for (const auto& [model, p] : j["price_table"].items()) {
        c.price_table[model] = eval::Price{p.at("in").get<double>(), p.at("out").get<double>()};
      }
    }
    c.planner_max = j.value("planner_max", c.planner_max);
    c.operator_max = j.value("operator_max", c.operator_max);
    c.history_window = j.value("history_window", c.history_window);
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  check_config(c);
  return c;
}

Config load_config(const fs::path& path) {
  try {
    return config_from_json(nlohmann::json::parse(slurp(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, "config " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) fail(ErrorCode::ConfigError, e.what());
    throw;
  }
}

void check_config(const Config& c) {
  if (!(c.fs_timeout_s > 0)) fail(ErrorCode::ConfigError, "fs_timeout_s must be positive");
  if (c.planner_max < 1 || c.operator_max < 1 || c.history_window < 1 || c.workers < 1) {
    fail(ErrorCode::ConfigError, "planner_max, operator_max, history_window and workers must be positive");
  }
  for (const auto& [model, p] : c.price_table) {
    if (p.in < 0 || p.out < 0) fail(ErrorCode::ConfigError, "negative price for model '" + model + "'");
  }
  const auto& w = c.penalty_weights;
  if (w.deletion < 0 || w.shift < 0 || w.collapse < 0 || w.style < 0) {
    fail(ErrorCode::ConfigError, "penalty weights must be non-negative");
  }
}

std::vector<fs::path> discover_tasks(const fs::path& suite_dir) {
  if (!fs::is_directory(suite_dir)) fail(ErrorCode::IoError, "suite directory not found: " + suite_dir.string());
  std::vector<fs::path> tasks;
  for (const auto& entry : fs::directory_iterator(suite_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "ies.yaml")) tasks.push_back(entry.path());
  }
  if (tasks.empty()) fail(ErrorCode::IoError, "no task directories with ies.yaml under " + suite_dir.string());
  std::sort(tasks.begin(), tasks.end());
  return tasks;
}

double trace_cost(const fs::path& trace_path, const eval::PriceTable& prices) {
  std::vector<eval::Usage> usages;
  for (const auto& e : agent::parse_trace(slurp(trace_path))) {
    if (e.event != "usage") continue;
    usages.push_back({e.payload.value("model", std::string{}), e.payload.value("prompt_tokens", 0L),
                      e.payload.value("completion_tokens", 0L)});
  }
  return eval::cost_of(usages, prices);
}

eval::TaskReport evaluate_task_dir(const fs::path& task_dir, layout::Scorer& scorer, const RunOptions& options) {
  eval::TaskReport setup_failure;
  setup_failure.task_id = task_dir.filename().string();
  setup_failure.fs = true;

  std::optional<ies::Script> script;
  try {
    script = ies::parse(slurp(task_dir / "ies.yaml"));
  } catch (const std::exception& e) {
    setup_failure.error = std::string("ies.yaml: ") + e.what();
    return setup_failure;
  }

  DriverOptions driver = options.driver;
  driver.timeout_s = options.config.fs_timeout_s;
  SessionFactory factory;
  if (options.backend == Backend::Sim) {
    const fs::path launch_json = task_dir / "launch.json";
    fs::path model = task_dir / "app.json";
    if (!fs::exists(model) && fs::exists(launch_json)) {
      try {
        const auto desc = parse_launch_descriptor(slurp(launch_json), task_dir);
        if (const auto* sim = std::get_if<SimLaunch>(&desc)) model = sim->model_path;
      } catch (const std::exception&) {
      }
    }
    factory = [model, driver] { return launch(SimLaunch{model}, driver); };
  } else {
    driver.enable_atspi = true;
    factory = [task_dir, driver]() -> std::unique_ptr<Session> {
      return launch(parse_launch_descriptor(slurp(task_dir / "launch.json"), task_dir), driver);
    };
  }

  eval::EvalConfig eval_config;
  eval_config.layout_gate = options.config.layout_gate;
  eval::TaskReport report = eval::run_task(*script, factory, scorer, eval::screen_loader(task_dir), eval_config);

  const fs::path trace = task_dir / "debug_trace.jsonl";
  if (fs::exists(trace)) {
    try {
      report.cost = trace_cost(trace, options.config.price_table);
    } catch (const std::exception& e) {
      report.error = std::string("cost: ") + e.what();
    }
  }
  return report;
}

SuiteResult run_suite(const fs::path& suite_dir, const RunOptions& options) {
  const auto tasks = discover_tasks(suite_dir);
  std::vector<eval::TaskReport> reports(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::unique_ptr<layout::Scorer> scorer;
    std::string scorer_error;
    try {
      scorer = options.scorer();
    } catch (const std::exception& e) {
      scorer_error = e.what();
    }
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      if (!scorer) {
        reports[i].task_id = tasks[i].filename().string();
        reports[i].fs = true;
        reports[i].error = "scorer unavailable: " + scorer_error;
        continue;
      }
      reports[i] = evaluate_task_dir(tasks[i], *scorer, options);
    }
  };

  const int n = std::clamp(options.config.workers, 1, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SuiteResult result;
  result.suite = eval::aggregate(reports);
  std::stable_sort(reports.begin(), reports.end(),
                   [](const eval::TaskReport& a, const eval::TaskReport& b) { return a.task_id < b.task_id; });
  result.tasks = std::move(reports);
  return result;
}

void write_reports(const SuiteResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir / "tasks");
  spill(out_dir / "suite.json", eval::emit_report(result.suite, result.tasks, eval::ReportFormat::Json));
  spill(out_dir / "suite.csv", eval::emit_report(result.suite, result.tasks, eval::ReportFormat::Csv));
  spill(out_dir / "suite.md", eval::emit_report(result.suite, result.tasks, eval::ReportFormat::Md));
  for (const auto& t : result.tasks) {
    spill(out_dir / "tasks" / (safe_file_name(t.task_id) + ".json"), eval::to_json(t).dump(2) + "\n");
  }
}

}  // namespace guicheck
