// Copyright 2026 The cradle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cradle/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "cradle/error.hpp"

namespace cradle {
namespace fs = std::filesystem;
namespace {

class ProcessSlots {
 public:
  ProcessSlots()
      : limit_(std::max(2u, 2 * std::thread::hardware_concurrency())) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < limit_; });
    ++in_use_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      --in_use_;
    }
    cv_.notify_one();
  }
  void set_limit(unsigned n) {
    {
      std::lock_guard lock(mu_);
      limit_ = std::max(1u, n);
    }
    cv_.notify_all();
  }
  unsigned limit() {
    std::lock_guard lock(mu_);
    return limit_;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  unsigned limit_;
  unsigned in_use_ = 0;
};

ProcessSlots& Slots() {
  static ProcessSlots slots;
  return slots;
}

struct SlotGuard {
  SlotGuard() { Slots().acquire(); }
  ~SlotGuard() { Slots().release(); }
};

struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

constexpr std::size_t kMaxCapture = 8u << 20;

void Append(std::string& out, const char* buf, std::size_t n) {
  out.append(buf, n);
  if (out.size() > kMaxCapture) out.erase(0, out.size() - kMaxCapture / 2);
}

int DecodeStatus(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

void SetMaxConcurrentProcesses(unsigned limit) { Slots().set_limit(limit); }
unsigned MaxConcurrentProcesses() { return Slots().limit(); }

ProcessResult RunShell(const std::string& command, const fs::path& cwd,
                       std::chrono::seconds timeout, std::stop_token stop) {
  using Clock = std::chrono::steady_clock;
  SlotGuard slot;
  ProcessResult result;
  const auto start = Clock::now();

  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kIoError, "pipe() failed");
  }
  Fd read_end{pipefd[0]};
  Fd write_end{pipefd[1]};
  // Everything the child needs is prepared before fork().
  const std::string dir = cwd.string();
  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};

  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kIoError, "fork() failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(write_end.fd, STDOUT_FILENO);
    ::dup2(write_end.fd, STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (!dir.empty() && ::chdir(dir.c_str()) != 0) ::_exit(126);
    ::execv("/bin/sh", const_cast<char* const*>(argv));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(write_end.fd);
  write_end.fd = -1;
  ::fcntl(read_end.fd, F_SETFL, O_NONBLOCK);

  const auto deadline = start + timeout;
  Clock::time_point kill_at{};
  bool term_sent = false;
  bool killed = false;
  bool pipe_open = true;
  bool exited = false;
  int status = 0;
  char buf[8192];

  while (!exited) {
    const auto now = Clock::now();
    if (!term_sent && (now >= deadline || stop.stop_requested())) {
      result.timed_out = now >= deadline;
      result.cancelled = !result.timed_out;
      ::kill(-pid, SIGTERM);
      term_sent = true;
      kill_at = now + kKillGrace;
    }
    if (term_sent && !killed && now >= kill_at) {
      ::kill(-pid, SIGKILL);
      killed = true;
    }
    if (pipe_open) {
      pollfd pfd{read_end.fd, POLLIN, 0};
      if (::poll(&pfd, 1, 50) > 0) {
        ssize_t n = ::read(read_end.fd, buf, sizeof buf);
        if (n > 0) {
          Append(result.output, buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          pipe_open = false;
        }
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) exited = true;
  }
  // Drain what is already buffered; grandchildren may keep the pipe open.
  for (;;) {
    ssize_t n = ::read(read_end.fd, buf, sizeof buf);
    if (n <= 0) break;
    Append(result.output, buf, static_cast<std::size_t>(n));
  }
  // Leftover group members are not allowed to outlive the invocation.
  ::kill(-pid, SIGKILL);

  result.exit_code = DecodeStatus(status);
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      Clock::now() - start);
  return result;
}

std::string CommandWord(std::string_view command) {
  std::istringstream in{std::string(command)};
  std::string word;
  in >> word;
  return word;
}

bool CommandResolvable(std::string_view word) {
  if (word.empty()) return false;
  if (word.find('/') != std::string_view::npos) {
    return ::access(std::string(word).c_str(), X_OK) == 0;
  }
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::istringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) dir = ".";
    fs::path candidate = fs::path(dir) / word;
    if (::access(candidate.c_str(), X_OK) == 0) return true;
  }
  return false;
}

ScratchDir::ScratchDir(const fs::path& root) {
  fs::path base = root.empty() ? fs::temp_directory_path() : root;
  fs::create_directories(base);
  std::string tmpl = (base / "cradle-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(ErrorCode::kIoError, "cannot create scratch dir under " +
                                         base.string());
  }
  path_ = tmpl;
}

ScratchDir::~ScratchDir() {
  if (keep_) return;
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace cradle
