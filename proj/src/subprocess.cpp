#include "guicheck/subprocess.hpp"

#include "guicheck/error.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace guicheck {

namespace {

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

std::once_flag g_sigpipe_once;

}  // namespace

Subprocess::Subprocess(const SpawnOptions& options) {
  if (options.argv.empty()) fail(ErrorCode::LaunchFailed, "empty command");
  std::call_once(g_sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(ErrorCode::LaunchFailed, std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail(ErrorCode::LaunchFailed, std::strerror(errno));
  }
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    fail(ErrorCode::LaunchFailed, std::strerror(errno));
  }

  // Everything the child needs is prepared before fork.
  std::vector<char*> argv;
  for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    fail(ErrorCode::LaunchFailed, std::string("fork: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    if (options.cwd && ::chdir(options.cwd->c_str()) != 0) {
      const char msg[] = "chdir failed\n";
      [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg, sizeof msg - 1);
      ::_exit(127);
    }
    for (const auto& [k, v] : options.env) ::setenv(k.c_str(), v.c_str(), 1);
    ::execvp(argv[0], argv.data());
    const std::string msg = std::string("exec failed: ") + argv[0] + ": " + std::strerror(errno) + "\n";
    [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg.data(), msg.size());
    ::_exit(127);
  }

  ::setpgid(pid_, pid_);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  stdin_fd_ = in_pipe[1];
  open_streams_ = 2;
  readers_.emplace_back([this, fd = out_pipe[0], p = options.stdout_is_protocol] { reader_loop(fd, p); });
  readers_.emplace_back([this, fd = err_pipe[0]] { reader_loop(fd, false); });
}

Subprocess::~Subprocess() {
  kill();
  close_fd(stdin_fd_);
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
}

void Subprocess::reader_loop(int fd, bool protocol) {
  std::string pending;
  char buf[4096];
  auto flush_line = [&](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::lock_guard lock(mutex_);
    if (protocol) {
      lines_.push_back(std::move(line));
      lines_cv_.notify_all();
    } else {
      logs_.push_back(std::move(line));
    }
  };
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = pending.find('\n')) != std::string::npos) {
      flush_line(pending.substr(0, pos));
      pending.erase(0, pos + 1);
    }
  }
  if (!pending.empty()) flush_line(pending);
  ::close(fd);
  std::lock_guard lock(mutex_);
  --open_streams_;
  lines_cv_.notify_all();
}

void Subprocess::reap(bool block) {
  std::lock_guard lock(mutex_);
  if (exit_code_ || pid_ <= 0) return;
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r == pid_) {
    exit_code_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
}

bool Subprocess::running() {
  reap(false);
  std::lock_guard lock(mutex_);
  return !exit_code_;
}

std::optional<int> Subprocess::exit_code() {
  reap(false);
  std::lock_guard lock(mutex_);
  return exit_code_;
}

bool Subprocess::wait_for(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (running()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

void Subprocess::kill(std::chrono::milliseconds grace) {
  if (!running()) return;
  ::kill(-pid_, SIGTERM);
  if (!wait_for(grace)) {
    ::kill(-pid_, SIGKILL);
    reap(true);
  }
}

bool Subprocess::write_line(const std::string& line) {
  if (stdin_fd_ < 0) return false;
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(stdin_fd_, p, left);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> Subprocess::read_line(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  lines_cv_.wait_for(lock, timeout, [&] { return !lines_.empty() || open_streams_ == 0; });
  if (lines_.empty()) return std::nullopt;
  std::string line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

void Subprocess::drain(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  lines_cv_.wait_for(lock, timeout, [&] { return open_streams_ == 0; });
}

std::vector<std::string> Subprocess::logs() const {
  std::lock_guard lock(mutex_);
  return logs_;
}

SupervisedRun run_supervised(const SpawnOptions& options, std::chrono::milliseconds timeout) {
  SupervisedRun run;
  Subprocess proc(options);
  if (!proc.wait_for(timeout)) {
    run.timed_out = true;
    proc.kill();
  }
  run.exit_code = proc.exit_code();
  proc.drain(std::chrono::milliseconds(500));
  run.logs = proc.logs();
  return run;
}

}  // namespace guicheck
