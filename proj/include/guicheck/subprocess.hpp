#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace guicheck {

struct SpawnOptions {
  std::vector<std::string> argv;
  std::map<std::string, std::string> env;  // added to the inherited environment
  std::optional<std::filesystem::path> cwd;
  /// When true, stdout lines are queued for read_line() and only stderr goes
  /// to the log; otherwise both streams are logged.
  bool stdout_is_protocol = false;
};

/// Supervised child process in its own process group, with captured output.
/// The destructor kills and reaps the child.
class Subprocess {
public:
  /// Throws LaunchFailed when fork/exec setup fails. exec failure itself is
  /// reported as exit code 127 with a log line.
  explicit Subprocess(const SpawnOptions& options);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  int pid() const { return pid_; }
  bool running();
  std::optional<int> exit_code();

  /// Waits for exit up to timeout; returns whether the child exited.
  bool wait_for(std::chrono::milliseconds timeout);

  /// SIGTERM to the group, SIGKILL after the grace period, then reap. Idempotent.
  void kill(std::chrono::milliseconds grace = std::chrono::milliseconds(200));

  /// Writes one line to the child's stdin. Returns false if the pipe is closed.
  bool write_line(const std::string& line);

  /// Next protocol line from stdout; nullopt on timeout or EOF.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  /// Blocks until both output pipes hit EOF (or timeout).
  void drain(std::chrono::milliseconds timeout);

  std::vector<std::string> logs() const;

private:
  void reader_loop(int fd, bool protocol);
  void reap(bool block);

  int pid_ = -1;
  int stdin_fd_ = -1;
  std::optional<int> exit_code_;
  mutable std::mutex mutex_;
  std::condition_variable lines_cv_;
  std::deque<std::string> lines_;
  int open_streams_ = 0;
  std::vector<std::string> logs_;
  std::vector<std::thread> readers_;
};

struct SupervisedRun {
  std::optional<int> exit_code;
  bool timed_out = false;
  std::vector<std::string> logs;
};

/// Runs a command to completion under a wall-clock limit, killing the whole
/// process group on timeout.
SupervisedRun run_supervised(const SpawnOptions& options, std::chrono::milliseconds timeout);

}  // namespace guicheck
