#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>

namespace rbt {

// Child process running `/bin/sh -c command` with stdin, stdout and stderr
// piped. Lines are newline-terminated; stderr is drained while waiting on
// stdout and kept (bounded) for diagnostics.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  // False when the child has closed its stdin.
  bool write_line(const std::string& line);
  // nullopt on end of stream; throws Timeout when nothing arrives in time.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  void close_stdin();
  // Kills the whole process group and reaps it; returns the wait status.
  int kill();
  // Reaps the child if it has exited, waiting up to `grace`.
  std::optional<int> wait_for_exit(std::chrono::milliseconds grace);

  const std::string& stderr_text() const noexcept { return stderr_; }
  pid_t pid() const noexcept { return pid_; }
  const std::string& command() const noexcept { return command_; }

  static std::string describe_status(int status);

 private:
  void drain_stderr(bool block_until_eof);

  std::string command_;
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  int err_ = -1;
  std::string buffer_;
  std::string stderr_;
  std::optional<int> status_;
};

}  // namespace rbt
