#pragma once

// Uniform runtime access to a GUI program: launch, accessibility snapshot,
// interaction, screenshot, terminate. Two backends: the simulator and an
// adapter for the Linux accessibility bus.

#include "guicheck/accessibility.hpp"
#include "guicheck/geometry.hpp"
#include "guicheck/sim.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace guicheck {

enum class Backend { Sim, AccessibilityBus };
enum class SessionStatus { Running, FailedToStart, Exited };

std::string_view to_string(SessionStatus s);

struct Action {
  NodeAction kind = NodeAction::Click;
  std::string payload;  // text for SetText, option for Select
};

enum class RejectReason { ActionUnavailable, Disabled, BackendError };

struct ActOutcome {
  bool accepted = false;
  RejectReason reason = RejectReason::ActionUnavailable;
  std::string detail;

  static ActOutcome Accepted() { return {true, RejectReason::ActionUnavailable, {}}; }
  static ActOutcome Rejected(RejectReason r, std::string detail) { return {false, r, std::move(detail)}; }
};

std::string_view to_string(RejectReason r);

/// Monotonic time source; the simulator uses a virtual one so delays cost nothing.
class Clock {
public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  virtual void sleep_for(double seconds) = 0;
};

class ManualClock final : public Clock {
public:
  double now() const override { return now_; }
  void sleep_for(double seconds) override { now_ += seconds; }

private:
  double now_ = 0.0;
};

class SystemClock final : public Clock {
public:
  double now() const override;
  void sleep_for(double seconds) override;
};

/// One running (or failed) program instance. Not thread-safe: confine a
/// session to one worker at a time.
class Session {
public:
  virtual ~Session() = default;

  virtual Backend backend() const = 0;
  virtual SessionStatus status() const = 0;
  virtual std::vector<std::string> logs() const = 0;
  virtual double launch_elapsed() const = 0;

  /// Throws SessionDead unless running.
  virtual AccessibilityNode snapshot_tree() = 0;
  /// Throws SessionDead, or StaleNode when the node is not in the current tree.
  virtual ActOutcome act(const AccessibilityNode& node, const Action& action) = 0;
  /// Throws SessionDead unless running.
  virtual RasterImage screenshot() = 0;
  /// Idempotent. Running becomes Exited; FailedToStart stays terminal.
  virtual void terminate() = 0;
};

using SessionFactory = std::function<std::unique_ptr<Session>()>;

struct SimLaunch {
  std::filesystem::path model_path;
};

struct AtspiLaunch {
  std::vector<std::string> command;
  std::map<std::string, std::string> display_env;
};

using LaunchDescriptor = std::variant<SimLaunch, AtspiLaunch>;

/// {kind: "sim", model_path} | {kind: "atspi", command: [...], display_env: {...}}.
/// Relative model paths resolve against base_dir. Throws SyntaxError.
LaunchDescriptor parse_launch_descriptor(std::string_view json_text, const std::filesystem::path& base_dir);

struct DriverOptions {
  double timeout_s = 10.0;
  /// Clock for the simulator's start delay; a fresh ManualClock when null.
  std::shared_ptr<Clock> clock;
  /// Accessibility-bus backend capability flag.
  bool enable_atspi = false;
  /// Bridge command speaking the line protocol documented in atspi_bridge.hpp.
  std::vector<std::string> atspi_bridge;
};

/// Default options: timeout 10 s, capability flag from the build option or
/// GUICHECK_ENABLE_ATSPI=1, bridge command from GUICHECK_ATSPI_BRIDGE.
DriverOptions default_driver_options();

/// Never throws: failures are reported as status FailedToStart with logs.
std::unique_ptr<Session> launch(const LaunchDescriptor& descriptor, const DriverOptions& options);

/// Simulator session over an already-loaded model.
std::unique_ptr<Session> launch_sim(std::shared_ptr<const sim::AppModel> model, const DriverOptions& options);

/// Read access to the simulator state behind a session (nullptr for other backends).
const sim::SimState* sim_state(const Session& session);

}  // namespace guicheck
