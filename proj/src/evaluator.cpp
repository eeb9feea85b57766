#include "guicheck/evaluator.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace guicheck::eval {

namespace {

StepOutcome make(std::size_t index, ies::StepKind kind, StepStatus status, std::string reason = {}) {
  return StepOutcome{index, kind, status, std::move(reason), std::nullopt};
}

struct Located {
  AccessibilityNode tree;
  const AccessibilityNode* node = nullptr;
  std::string error;
};

Located locate(Session& session, const Selector& sel) {
  Located out;
  out.tree = session.snapshot_tree();
  try {
    out.node = find(out.tree, sel).node;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFound) throw;
    out.error = "not found: " + describe(sel);
  }
  return out;
}

std::string rejected(const ActOutcome& r) {
  std::string msg = "action rejected (" + std::string(to_string(r.reason)) + ")";
  if (!r.detail.empty()) msg += ": " + r.detail;
  return msg;
}

StepOutcome interact(Session& session, const Selector& sel, const Action& action, std::size_t index,
                     ies::StepKind kind) {
  Located loc = locate(session, sel);
  if (!loc.node) return make(index, kind, StepStatus::Fail, loc.error);
  ActOutcome r;
  try {
    r = session.act(*loc.node, action);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StaleNode) throw;
    return make(index, kind, StepStatus::Fail, e.what());
  }
  if (!r.accepted) return make(index, kind, StepStatus::Fail, rejected(r));
  if (kind != ies::StepKind::InputText) return make(index, kind, StepStatus::Pass);

  const std::string node_id = loc.node->node_id;
  const AccessibilityNode after = session.snapshot_tree();
  const AccessibilityNode* node = find_by_id(after, node_id);
  if (!node) return make(index, kind, StepStatus::Fail, "input field disappeared after typing");
  if (node->value.value_or("") != action.payload) {
    return make(index, kind, StepStatus::Fail,
                "field shows \"" + node->value.value_or("") + "\" instead of \"" + action.payload + "\"");
  }
  return make(index, kind, StepStatus::Pass);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<TaskReport> sorted(std::span<const TaskReport> reports) {
  std::vector<TaskReport> out(reports.begin(), reports.end());
  std::stable_sort(out.begin(), out.end(), [](const TaskReport& a, const TaskReport& b) {
    if (a.task_id != b.task_id) return a.task_id < b.task_id;
    return to_json(a).dump() < to_json(b).dump();
  });
  return out;
}

}  // namespace

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Pass: return "pass";
    case StepStatus::Fail: return "fail";
    case StepStatus::Scored: return "scored";
    case StepStatus::Unattempted: return "unattempted";
  }
  return "unknown";
}

ScreenLoader screen_loader(const std::filesystem::path& base_dir) {
  return [base_dir](const std::string& ref) { return read_png(base_dir / ref); };
}

StepOutcome exec_step(Session& session, const ies::Step& step, std::size_t index, layout::Scorer& scorer,
                      const ScreenLoader& screens, const EvalConfig& config) {
  const ies::StepKind kind = ies::kind_of(step);
  return std::visit(
      [&](const auto& s) -> StepOutcome {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ies::AssertElement>) {
          Located loc = locate(session, s.selector);
          if (!loc.node) return make(index, kind, StepStatus::Fail, loc.error);
          if (!loc.node->states.count(NodeState::Visible)) return make(index, kind, StepStatus::Fail, "not visible");
          return make(index, kind, StepStatus::Pass);
        } else if constexpr (std::is_same_v<T, ies::AssertColor>) {
          Located loc = locate(session, s.selector);
          if (!loc.node) return make(index, kind, StepStatus::Fail, loc.error);
          const RasterImage region = session.screenshot().crop(loc.node->bounds);
          if (region.empty()) return make(index, kind, StepStatus::Fail, "element has no on-screen area");
          const Rgb actual = dominant_color(region);
          const double d = color_distance(actual, s.expected);
          if (colors_match(actual, s.expected)) return make(index, kind, StepStatus::Pass);
          return make(index, kind, StepStatus::Fail,
                      "color " + to_hex(actual) + " vs expected " + to_hex(s.expected) + " (d=" + format_fixed(d, 2) + ")");
        } else if constexpr (std::is_same_v<T, ies::AssertLayout>) {
          RasterImage expected;
          try {
            expected = screens(s.ref_image_path);
          } catch (const Error& e) {
            return make(index, kind, StepStatus::Fail, std::string("reference screenshot: ") + e.what());
          }
          const double score = scorer.score(expected, session.screenshot());
          StepOutcome out = make(index, kind, StepStatus::Scored);
          out.score = score;
          if (config.layout_gate && score < *config.layout_gate) {
            out.status = StepStatus::Fail;
            out.reason = "layout score " + format_fixed(score, 4) + " below gate " + format_fixed(*config.layout_gate, 4);
          }
          return out;
        } else if constexpr (std::is_same_v<T, ies::Click>) {
          return interact(session, s.selector, Action{NodeAction::Click, {}}, index, kind);
        } else if constexpr (std::is_same_v<T, ies::InputText>) {
          return interact(session, s.selector, Action{NodeAction::SetText, s.text}, index, kind);
        } else {
          return interact(session, s.selector, Action{NodeAction::Select, s.option}, index, kind);
        }
      },
      step);
}

bool gating_ok(const StepOutcome& o) { return o.status == StepStatus::Pass || o.status == StepStatus::Scored; }

TaskReport run_task(const ies::Script& script, const SessionFactory& factory, layout::Scorer& scorer,
                    const ScreenLoader& screens, const EvalConfig& config) {
  TaskReport report;
  report.task_id = script.task_id();
  const auto& steps = script.steps();

  auto unattempted_from = [&](std::size_t first, const std::string& reason) {
    for (std::size_t i = first; i < steps.size(); ++i) {
      report.outcomes.push_back(make(i, ies::kind_of(steps[i]), StepStatus::Unattempted, reason));
    }
  };

  std::unique_ptr<Session> session;
  try {
    session = factory();
  } catch (const std::exception& e) {
    report.fs = true;
    unattempted_from(0, std::string("launch error: ") + e.what());
    return report;
  }
  if (!session || session->status() != SessionStatus::Running) {
    report.fs = true;
    std::string reason = "failed to start";
    if (session) {
      const auto logs = session->logs();
      if (!logs.empty()) reason += ": " + logs.back();
    }
    unattempted_from(0, reason);
    return report;
  }

  for (std::size_t i = 0; i < steps.size(); ++i) {
    try {
      report.outcomes.push_back(exec_step(*session, steps[i], i, scorer, screens, config));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SessionDead) {
        report.outcomes.push_back(make(i, ies::kind_of(steps[i]), StepStatus::Fail, e.what()));
        continue;
      }
      unattempted_from(i, "session ended: " + std::string(e.what()));
      break;
    } catch (const std::exception& e) {
      report.outcomes.push_back(make(i, ies::kind_of(steps[i]), StepStatus::Fail, e.what()));
    }
  }
  session->terminate();

  double sum = 0.0;
  int scored = 0;
  for (const auto& o : report.outcomes) {
    if (o.score) {
      sum += *o.score;
      ++scored;
    }
  }
  report.visual_score = scored ? sum / scored : 0.0;
  report.resolved = std::all_of(report.outcomes.begin(), report.outcomes.end(), gating_ok);
  return report;
}

SuiteReport aggregate(std::span<const TaskReport> reports) {
  if (reports.empty()) fail(ErrorCode::EmptyInput, "aggregate of zero task reports");
  const auto tasks = sorted(reports);

  struct Tally {
    long pass = 0;
    long total = 0;
    double pct() const { return total ? 100.0 * static_cast<double>(pass) / static_cast<double>(total) : 0.0; }
  };
  Tally ae, ac, ck;
  long resolved = 0, fs = 0;
  double visual = 0.0, cost = 0.0;
  for (const auto& t : tasks) {
    resolved += t.resolved;
    fs += t.fs;
    visual += t.visual_score;
    cost += t.cost;
    for (const auto& o : t.outcomes) {
      Tally* tally = o.kind == ies::StepKind::AssertElement ? &ae
                     : o.kind == ies::StepKind::AssertColor ? &ac
                     : o.kind == ies::StepKind::Click       ? &ck
                                                            : nullptr;
      if (!tally) continue;
      ++tally->total;
      tally->pass += o.status == StepStatus::Pass;
    }
  }
  const double n = static_cast<double>(tasks.size());
  SuiteReport s;
  s.n_tasks = tasks.size();
  s.resolved_pct = 100.0 * static_cast<double>(resolved) / n;
  s.fs_pct = 100.0 * static_cast<double>(fs) / n;
  s.ae = ae.pct();
  s.ac = ac.pct();
  s.ck = ck.pct();
  s.avg_visual = visual / n;
  s.avg_cost = cost / n;
  return s;
}

double cost_of(std::span<const Usage> usages, const PriceTable& prices) {
  double total = 0.0;
  for (const auto& u : usages) {
    if (u.prompt_tokens == 0 && u.completion_tokens == 0) continue;
    auto it = prices.find(u.model);
    if (it == prices.end()) fail(ErrorCode::ConfigError, "no price for model '" + u.model + "'");
    total += static_cast<double>(u.prompt_tokens) / 1000.0 * it->second.in +
             static_cast<double>(u.completion_tokens) / 1000.0 * it->second.out;
  }
  return total;
}

nlohmann::ordered_json to_json(const StepOutcome& o) {
  nlohmann::ordered_json j;
  j["index"] = o.index;
  j["kind"] = std::string(ies::key_of(o.kind));
  j["status"] = std::string(to_string(o.status));
  if (!o.reason.empty()) j["reason"] = o.reason;
  if (o.score) j["score"] = *o.score;
  return j;
}

nlohmann::ordered_json to_json(const TaskReport& t) {
  nlohmann::ordered_json j;
  j["task_id"] = t.task_id;
  j["fs"] = t.fs;
  j["resolved"] = t.resolved;
  j["visual_score"] = t.visual_score;
  j["cost"] = t.cost;
  j["outcomes"] = nlohmann::ordered_json::array();
  for (const auto& o : t.outcomes) j["outcomes"].push_back(to_json(o));
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

nlohmann::ordered_json to_json(const SuiteReport& s) {
  nlohmann::ordered_json j;
  j["resolved_pct"] = s.resolved_pct;
  j["fs_pct"] = s.fs_pct;
  j["ae"] = s.ae;
  j["ac"] = s.ac;
  j["ck"] = s.ck;
  j["avg_visual"] = s.avg_visual;
  j["avg_cost"] = s.avg_cost;
  j["n_tasks"] = s.n_tasks;
  return j;
}

StepOutcome step_outcome_from_json(const nlohmann::json& j) {
  StepOutcome o;
  o.index = j.at("index").get<std::size_t>();
  o.kind = ies::kind_from_key(j.at("kind").get<std::string>());
  const std::string status = j.at("status").get<std::string>();
  bool known = false;
  for (auto s : {StepStatus::Pass, StepStatus::Fail, StepStatus::Scored, StepStatus::Unattempted}) {
    if (to_string(s) == status) {
      o.status = s;
      known = true;
    }
  }
  if (!known) fail(ErrorCode::SyntaxError, "unknown step status '" + status + "'");
  o.reason = j.value("reason", std::string{});
  if (j.contains("score")) o.score = j.at("score").get<double>();
  return o;
}

TaskReport task_report_from_json(const nlohmann::json& j) {
  TaskReport t;
  t.task_id = j.at("task_id").get<std::string>();
  t.fs = j.at("fs").get<bool>();
  t.resolved = j.at("resolved").get<bool>();
  t.visual_score = j.at("visual_score").get<double>();
  t.cost = j.at("cost").get<double>();
  for (const auto& o : j.at("outcomes")) t.outcomes.push_back(step_outcome_from_json(o));
  t.error = j.value("error", std::string{});
  return t;
}

SuiteReport suite_report_from_json(const nlohmann::json& j) {
  SuiteReport s;
  s.resolved_pct = j.at("resolved_pct").get<double>();
  s.fs_pct = j.at("fs_pct").get<double>();
  s.ae = j.at("ae").get<double>();
  s.ac = j.at("ac").get<double>();
  s.ck = j.at("ck").get<double>();
  s.avg_visual = j.at("avg_visual").get<double>();
  s.avg_cost = j.at("avg_cost").get<double>();
  s.n_tasks = j.at("n_tasks").get<std::size_t>();
  return s;
}

std::string emit_report(const SuiteReport& suite, std::span<const TaskReport> tasks, ReportFormat format) {
  const auto ordered = sorted(tasks);
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["suite"] = to_json(suite);
      j["tasks"] = nlohmann::ordered_json::array();
      for (const auto& t : ordered) j["tasks"].push_back(to_json(t));
      out << j.dump(2) << "\n";
      break;
    }
    case ReportFormat::Csv: {
      out << "task_id,fs,resolved,visual_score,cost\n";
      for (const auto& t : ordered) {
        std::string id = t.task_id;
        if (id.find_first_of(",\"\n") != std::string::npos) {
          std::string quoted = "\"";
          for (char c : id) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
          id = quoted + "\"";
        }
        out << id << ',' << (t.fs ? "true" : "false") << ',' << (t.resolved ? "true" : "false") << ','
            << format_fixed(t.visual_score, 6) << ',' << format_fixed(t.cost, 6) << "\n";
      }
      break;
    }
    case ReportFormat::Md: {
      out << "# Evaluation report\n\n";
      out << "- Tasks: " << suite.n_tasks << "\n";
      out << "- Resolved: " << format_fixed(suite.resolved_pct, 2) << "%\n";
      out << "- Fail-to-start: " << format_fixed(suite.fs_pct, 2) << "%\n";
      out << "- Assert element: " << format_fixed(suite.ae, 2) << "%\n";
      out << "- Assert color: " << format_fixed(suite.ac, 2) << "%\n";
      out << "- Click: " << format_fixed(suite.ck, 2) << "%\n";
      out << "- Avg visual score: " << format_fixed(suite.avg_visual, 4) << "\n";
      out << "- Avg cost: " << format_fixed(suite.avg_cost, 6) << "\n\n";
      out << "| task | fs | resolved | visual score | cost |\n";
      out << "|---|---|---|---|---|\n";
      for (const auto& t : ordered) {
        std::string id = t.task_id;
        for (std::size_t p = 0; (p = id.find('|', p)) != std::string::npos; p += 2) id.replace(p, 1, "\\|");
        out << "| " << id << " | " << (t.fs ? "yes" : "no") << " | " << (t.resolved ? "yes" : "no") << " | "
            << format_fixed(t.visual_score, 4) << " | " << format_fixed(t.cost, 6) << " |\n";
      }
      break;
    }
  }
  return out.str();
}

ParsedReport parse_report_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ParsedReport r;
    r.suite = suite_report_from_json(j.at("suite"));
    for (const auto& t : j.at("tasks")) r.tasks.push_back(task_report_from_json(t));
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SyntaxError, std::string("report json: ") + e.what());
  }
}

}  // namespace guicheck::eval
