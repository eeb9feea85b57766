#include "guicheck/atspi_bridge.hpp"
#include "guicheck/driver.hpp"
#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"
#include "guicheck/subprocess.hpp"

#include <atomic>
#include <unistd.h>

namespace guicheck {

using Json = nlohmann::json;

Json node_to_json(const AccessibilityNode& node) {
  Json j;
  j["id"] = node.node_id;
  j["role"] = node.role;
  j["name"] = node.name;
  j["bounds"] = {node.bounds.x, node.bounds.y, node.bounds.w, node.bounds.h};
  Json states = Json::array();
  for (auto s : node.states) states.push_back(std::string(to_string(s)));
  Json actions = Json::array();
  for (auto a : node.actions) actions.push_back(std::string(to_string(a)));
  j["states"] = states;
  j["actions"] = actions;
  if (node.value) j["value"] = *node.value;
  Json children = Json::array();
  for (const auto& c : node.children) children.push_back(node_to_json(c));
  j["children"] = children;
  return j;
}

AccessibilityNode node_from_json(const Json& j) {
  try {
    AccessibilityNode node;
    node.node_id = j.at("id").get<std::string>();
    node.role = j.at("role").get<std::string>();
    node.name = j.at("name").get<std::string>();
    const auto b = j.at("bounds").get<std::vector<int>>();
    if (b.size() != 4) fail(ErrorCode::ProtocolError, "bounds must have four entries");
    node.bounds = Bounds{b[0], b[1], b[2], b[3]};
    for (const auto& s : j.value("states", Json::array())) {
      // Bridges may report states the harness does not model; those are dropped.
      try {
        node.states.insert(node_state_from(s.get<std::string>()));
      } catch (const Error&) {
      }
    }
    for (const auto& a : j.value("actions", Json::array())) {
      try {
        node.actions.insert(node_action_from(a.get<std::string>()));
      } catch (const Error&) {
      }
    }
    if (auto it = j.find("value"); it != j.end() && !it->is_null()) node.value = it->get<std::string>();
    for (const auto& c : j.value("children", Json::array())) node.children.push_back(node_from_json(c));
    return node;
  } catch (const Json::exception& e) {
    fail(ErrorCode::ProtocolError, std::string("malformed node: ") + e.what());
  }
}

namespace {

constexpr auto kRequestTimeout = std::chrono::seconds(5);

class AtspiSession final : public Session {
public:
  AtspiSession(const AtspiLaunch& spec, const DriverOptions& options) {
    if (options.atspi_bridge.empty()) fail(ErrorCode::LaunchFailed, "no accessibility bridge command configured");
    const auto started = std::chrono::steady_clock::now();
    app_ = std::make_unique<Subprocess>(SpawnOptions{spec.command, spec.display_env, std::nullopt, false});
    bridge_ = std::make_unique<Subprocess>(SpawnOptions{options.atspi_bridge, spec.display_env, std::nullopt, true});

    const auto deadline = started + std::chrono::duration<double>(options.timeout_s);
    try {
      request({{"op", "attach"}, {"pid", app_->pid()}});
      while (std::chrono::steady_clock::now() < deadline) {
        if (!app_->running()) {
          launch_logs_.push_back("process exited during startup with code " + std::to_string(*app_->exit_code()));
          break;
        }
        const Json reply = request({{"op", "snapshot"}});
        if (reply.contains("tree") && !reply["tree"].is_null()) {
          status_ = SessionStatus::Running;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
    } catch (const Error& e) {
      launch_logs_.push_back(e.what());
    }
    if (status_ != SessionStatus::Running && launch_logs_.empty()) {
      launch_logs_.push_back("no accessibility root within " + std::to_string(options.timeout_s) + " s");
    }
    elapsed_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (status_ != SessionStatus::Running) shutdown();
  }

  ~AtspiSession() override { shutdown(); }

  Backend backend() const override { return Backend::AccessibilityBus; }
  SessionStatus status() const override { return status_; }
  double launch_elapsed() const override { return elapsed_; }

  std::vector<std::string> logs() const override {
    std::vector<std::string> out = launch_logs_;
    if (app_) {
      auto app_logs = app_->logs();
      out.insert(out.end(), app_logs.begin(), app_logs.end());
    } else {
      out.insert(out.end(), final_app_logs_.begin(), final_app_logs_.end());
    }
    return out;
  }

  AccessibilityNode snapshot_tree() override {
    require_running();
    const Json reply = request({{"op", "snapshot"}});
    if (!reply.contains("tree") || reply["tree"].is_null()) fail(ErrorCode::SessionDead, "accessibility root vanished");
    return node_from_json(reply["tree"]);
  }

  ActOutcome act(const AccessibilityNode& node, const Action& action) override {
    require_running();
    const Json reply = request({{"op", "act"},
                                {"node_id", node.node_id},
                                {"action", std::string(to_string(action.kind))},
                                {"payload", action.payload}},
                               /*allow_error=*/true);
    if (reply.contains("error")) {
      if (reply["error"] == "stale") fail(ErrorCode::StaleNode, reply.value("detail", node.node_id));
      return ActOutcome::Rejected(RejectReason::BackendError, reply["error"].dump());
    }
    if (reply.value("outcome", "") == "accepted") return ActOutcome::Accepted();
    const std::string reason = reply.value("reason", "");
    const RejectReason r = reason == "Disabled" ? RejectReason::Disabled
                           : reason == "ActionUnavailable" ? RejectReason::ActionUnavailable
                                                           : RejectReason::BackendError;
    return ActOutcome::Rejected(r, reply.value("detail", reason));
  }

  RasterImage screenshot() override {
    require_running();
    static std::atomic<int> counter{0};
    const auto path = std::filesystem::temp_directory_path() /
                      ("guicheck-shot-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".png");
    request({{"op", "screenshot"}, {"path", path.string()}});
    RasterImage img = read_png(path);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return img;
  }

  void terminate() override {
    shutdown();
    if (status_ == SessionStatus::Running) status_ = SessionStatus::Exited;
  }

private:
  void require_running() {
    if (status_ == SessionStatus::Running && app_ && !app_->running()) status_ = SessionStatus::Exited;
    if (status_ != SessionStatus::Running) fail(ErrorCode::SessionDead, "application is not running");
  }

  Json request(const Json& req, bool allow_error = false) {
    if (!bridge_ || !bridge_->write_line(req.dump())) fail(ErrorCode::ProtocolError, "bridge is not accepting requests");
    auto line = bridge_->read_line(kRequestTimeout);
    if (!line) fail(ErrorCode::ProtocolError, "bridge did not answer " + req.value("op", std::string("?")));
    Json reply;
    try {
      reply = Json::parse(*line);
    } catch (const Json::parse_error&) {
      fail(ErrorCode::ProtocolError, "bridge sent malformed line: " + *line);
    }
    if (!allow_error && reply.contains("error")) fail(ErrorCode::ProtocolError, "bridge error: " + reply["error"].dump());
    return reply;
  }

  void shutdown() {
    if (app_) {
      app_->kill();
      app_->drain(std::chrono::milliseconds(200));
      final_app_logs_ = app_->logs();
      app_.reset();
    }
    bridge_.reset();
  }

  std::unique_ptr<Subprocess> app_;
  std::unique_ptr<Subprocess> bridge_;
  SessionStatus status_ = SessionStatus::FailedToStart;
  std::vector<std::string> launch_logs_;
  std::vector<std::string> final_app_logs_;
  double elapsed_ = 0.0;
};

}  // namespace

std::unique_ptr<Session> launch_atspi(const AtspiLaunch& spec, const DriverOptions& options) {
  return std::make_unique<AtspiSession>(spec, options);
}

}  // namespace guicheck
