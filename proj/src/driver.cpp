#include "guicheck/driver.hpp"

#include "guicheck/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sstream>
#include <thread>

namespace guicheck {

std::unique_ptr<Session> launch_atspi(const AtspiLaunch& spec, const DriverOptions& options);

namespace {

class SimSession final : public Session {
public:
  SimSession(std::shared_ptr<const sim::AppModel> model, const DriverOptions& options) : model_(std::move(model)) {
    std::shared_ptr<Clock> clock = options.clock ? options.clock : std::make_shared<ManualClock>();
    const double start = clock->now();
    if (model_->crash_on_start) {
      status_ = SessionStatus::FailedToStart;
      launch_logs_.push_back("process exited during startup: " + *model_->crash_on_start);
    } else if (model_->start_delay > options.timeout_s) {
      clock->sleep_for(options.timeout_s);
      status_ = SessionStatus::FailedToStart;
      std::ostringstream msg;
      msg << "no accessibility root within " << options.timeout_s << " s";
      launch_logs_.push_back(msg.str());
    } else {
      clock->sleep_for(model_->start_delay);
      state_ = sim::initial_state(*model_);
      status_ = SessionStatus::Running;
      launch_logs_.push_back("started on page '" + state_.current_page + "'");
    }
    elapsed_ = clock->now() - start;
  }

  Backend backend() const override { return Backend::Sim; }
  SessionStatus status() const override { return status_; }
  double launch_elapsed() const override { return elapsed_; }

  std::vector<std::string> logs() const override {
    std::vector<std::string> out = launch_logs_;
    out.insert(out.end(), state_.logs.begin(), state_.logs.end());
    return out;
  }

  AccessibilityNode snapshot_tree() override {
    require_running();
    return sim::accessibility_tree(state_);
  }

  ActOutcome act(const AccessibilityNode& node, const Action& action) override {
    require_running();
    const AccessibilityNode tree = sim::accessibility_tree(state_);
    const AccessibilityNode* live = find_by_id(tree, node.node_id);
    if (!live) fail(ErrorCode::StaleNode, "node '" + node.node_id + "' is not in the current tree");
    if (!live->has(action.kind)) {
      return ActOutcome::Rejected(RejectReason::ActionUnavailable,
                                  "'" + live->name + "' does not support " + std::string(to_string(action.kind)));
    }
    if (!live->has(NodeState::Enabled)) {
      return ActOutcome::Rejected(RejectReason::Disabled, "'" + live->name + "' is disabled");
    }

    const Selector target{live->role, live->name, 0};
    if (live != &tree) {
      sim::Page& page = state_.page();
      if (auto idx = sim::resolve_widget(page, target)) {
        sim::WidgetSpec& w = page.widgets[*idx];
        if (action.kind == NodeAction::SetText || action.kind == NodeAction::Select) w.text = action.payload;
        if (action.kind == NodeAction::Focus) w.states.insert(NodeState::Focused);
      }
    }
    state_ = sim::apply_action(*model_, state_, target, action.kind, action.payload).state;
    return ActOutcome::Accepted();
  }

  RasterImage screenshot() override {
    require_running();
    return sim::render(state_);
  }

  void terminate() override {
    if (status_ == SessionStatus::Running) status_ = SessionStatus::Exited;
  }

  const sim::SimState& state() const { return state_; }

private:
  void require_running() const {
    if (status_ != SessionStatus::Running) fail(ErrorCode::SessionDead, "session is not running");
  }

  std::shared_ptr<const sim::AppModel> model_;
  sim::SimState state_;
  SessionStatus status_ = SessionStatus::FailedToStart;
  std::vector<std::string> launch_logs_;
  double elapsed_ = 0.0;
};

class FailedSession final : public Session {
public:
  FailedSession(Backend backend, std::vector<std::string> logs) : backend_(backend), logs_(std::move(logs)) {}

  Backend backend() const override { return backend_; }
  SessionStatus status() const override { return SessionStatus::FailedToStart; }
  std::vector<std::string> logs() const override { return logs_; }
  double launch_elapsed() const override { return 0.0; }
  AccessibilityNode snapshot_tree() override { dead(); }
  ActOutcome act(const AccessibilityNode&, const Action&) override { dead(); }
  RasterImage screenshot() override { dead(); }
  void terminate() override {}

private:
  [[noreturn]] void dead() const { fail(ErrorCode::SessionDead, "session failed to start"); }

  Backend backend_;
  std::vector<std::string> logs_;
};

}  // namespace

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Running: return "running";
    case SessionStatus::FailedToStart: return "failed_to_start";
    case SessionStatus::Exited: return "exited";
  }
  return "unknown";
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::ActionUnavailable: return "ActionUnavailable";
    case RejectReason::Disabled: return "Disabled";
    case RejectReason::BackendError: return "BackendError";
  }
  return "Unknown";
}

double SystemClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_for(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

LaunchDescriptor parse_launch_descriptor(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "sim") {
      std::filesystem::path p = doc.at("model_path").get<std::string>();
      return SimLaunch{p.is_absolute() ? p : base_dir / p};
    }
    if (kind == "atspi") {
      AtspiLaunch spec;
      spec.command = doc.at("command").get<std::vector<std::string>>();
      if (spec.command.empty()) fail(ErrorCode::SyntaxError, "atspi command must not be empty");
      if (auto it = doc.find("display_env"); it != doc.end()) {
        spec.display_env = it->get<std::map<std::string, std::string>>();
      }
      return spec;
    }
    fail(ErrorCode::SyntaxError, "unknown launch kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SyntaxError, std::string("launch descriptor: ") + e.what());
  }
}

DriverOptions default_driver_options() {
  DriverOptions options;
#ifdef GUICHECK_ATSPI_DEFAULT_ON
  options.enable_atspi = true;
#endif
  if (const char* flag = std::getenv("GUICHECK_ENABLE_ATSPI")) options.enable_atspi = std::string(flag) == "1";
  if (const char* bridge = std::getenv("GUICHECK_ATSPI_BRIDGE")) {
    std::istringstream words(bridge);
    for (std::string w; words >> w;) options.atspi_bridge.push_back(w);
  }
  return options;
}

std::unique_ptr<Session> launch_sim(std::shared_ptr<const sim::AppModel> model, const DriverOptions& options) {
  return std::make_unique<SimSession>(std::move(model), options);
}

std::unique_ptr<Session> launch(const LaunchDescriptor& descriptor, const DriverOptions& options) {
  if (const auto* simd = std::get_if<SimLaunch>(&descriptor)) {
    try {
      auto model = std::make_shared<const sim::AppModel>(sim::load_model_file(simd->model_path.string()));
      return launch_sim(std::move(model), options);
    } catch (const Error& e) {
      return std::make_unique<FailedSession>(Backend::Sim, std::vector<std::string>{e.what()});
    }
  }
  const auto& atspi = std::get<AtspiLaunch>(descriptor);
  if (!options.enable_atspi) {
    return std::make_unique<FailedSession>(
        Backend::AccessibilityBus, std::vector<std::string>{"accessibility-bus backend is disabled"});
  }
  try {
    return launch_atspi(atspi, options);
  } catch (const Error& e) {
    return std::make_unique<FailedSession>(Backend::AccessibilityBus, std::vector<std::string>{e.what()});
  }
}

const sim::SimState* sim_state(const Session& session) {
  if (const auto* s = dynamic_cast<const SimSession*>(&session)) return &s->state();
  return nullptr;
}

}  // namespace guicheck
