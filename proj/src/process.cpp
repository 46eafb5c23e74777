#include "rbt/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rbt/error.hpp"

extern char** environ;

namespace rbt {

namespace {

constexpr std::size_t kStderrLimit = 64 * 1024;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::kIo, what + ": " + std::strerror(errno));
}

}  // namespace

Subprocess::Subprocess(const std::string& command) : command_(command) {
  ignore_sigpipe();
  int in[2], out[2], err[2];
  if (::pipe2(in, O_CLOEXEC) != 0) io_error("pipe");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]), ::close(in[1]);
    io_error("pipe");
  }
  if (::pipe2(err, O_CLOEXEC) != 0) {
    ::close(in[0]), ::close(in[1]), ::close(out[0]), ::close(out[1]);
    io_error("pipe");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err[1], STDERR_FILENO);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF);
  posix_spawnattr_setpgroup(&attr, 0);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigdefault(&attr, &defaults);

  const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, const_cast<char**>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(in[0]);
  ::close(out[1]);
  ::close(err[1]);
  if (rc != 0) {
    ::close(in[1]), ::close(out[0]), ::close(err[0]);
    throw Error(ErrorCode::kIo, "cannot spawn '" + command_ + "': " + std::strerror(rc));
  }
  in_ = in[1];
  out_ = out[0];
  err_ = err[0];
  ::fcntl(err_, F_SETFL, ::fcntl(err_, F_GETFL) | O_NONBLOCK);
}

Subprocess::~Subprocess() {
  close_stdin();
  if (!status_ && !wait_for_exit(std::chrono::milliseconds(200))) kill();
  close_fd(out_);
  close_fd(err_);
}

bool Subprocess::write_line(const std::string& line) {
  if (in_ < 0) return false;
  std::string data = line;
  data.push_back('\n');
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(in_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE) return false;
      io_error("write to '" + command_ + "'");
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> Subprocess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char chunk[4096];
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (out_ < 0) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::kTimeout, "no response from '" + command_ + "' within " +
                                                                std::to_string(timeout.count()) + " ms");
    pollfd fds[2] = {{out_, POLLIN, 0}, {err_, POLLIN, 0}};
    const int nfds = err_ >= 0 ? 2 : 1;
    const int rc = ::poll(fds, nfds, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      io_error("poll");
    }
    if (nfds == 2 && (fds[1].revents & (POLLIN | POLLHUP))) drain_stderr(false);
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(out_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error("read from '" + command_ + "'");
      }
      if (n == 0) {
        close_fd(out_);
        if (!buffer_.empty()) {
          std::string line = std::move(buffer_);
          buffer_.clear();
          return line;
        }
        return std::nullopt;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

void Subprocess::drain_stderr(bool block_until_eof) {
  char chunk[4096];
  while (err_ >= 0) {
    const ssize_t n = ::read(err_, chunk, sizeof chunk);
    if (n > 0) {
      if (stderr_.size() < kStderrLimit) stderr_.append(chunk, std::min<std::size_t>(n, kStderrLimit - stderr_.size()));
      continue;
    }
    if (n == 0) {
      close_fd(err_);
      return;
    }
    if (errno == EINTR) continue;
    if (errno == EAGAIN && block_until_eof) {
      pollfd p{err_, POLLIN, 0};
      if (::poll(&p, 1, 100) > 0) continue;
    }
    return;
  }
}

void Subprocess::close_stdin() { close_fd(in_); }

std::optional<int> Subprocess::wait_for_exit(std::chrono::milliseconds grace) {
  if (status_) return status_;
  const auto deadline = std::chrono::steady_clock::now() + grace;
  while (true) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      status_ = status;
      drain_stderr(true);
      return status_;
    }
    if (r < 0 && errno != EINTR) {
      status_ = 0;
      return status_;
    }
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

int Subprocess::kill() {
  if (status_) return *status_;
  ::kill(-pid_, SIGKILL);
  ::kill(pid_, SIGKILL);
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  status_ = status;
  drain_stderr(false);
  return status;
}

std::string Subprocess::describe_status(int status) {
  if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
  return "status " + std::to_string(status);
}

}  // namespace rbt
