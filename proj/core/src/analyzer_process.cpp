// Copyright 2026 The cpt Authors.
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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>

#include "cpt/process.hpp"

namespace cpt {
namespace {

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

int wait_child(pid_t pid, ProcessResult& res) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signaled = true;
    res.exit_code = 128 + WTERMSIG(status);
  }
  return status;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds) {
  ProcessResult res;
  if (argv.empty()) return res;

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe(out_pipe) != 0) return res;
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    return res;
  }

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDWR);
    ::dup2(devnull, STDIN_FILENO);
    ::dup2(devnull, STDERR_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(out_pipe[0]);
    ::execvp(cargv[0], cargv.data());
    int err = errno;
    (void)!::write(err_pipe[1], &err, sizeof(err));
    ::_exit(127);
  }
  int out_r = out_pipe[0];
  int out_w = out_pipe[1];
  int err_r = err_pipe[0];
  int err_w = err_pipe[1];
  close_fd(out_w);
  close_fd(err_w);
  if (pid < 0) {
    close_fd(out_r);
    close_fd(err_r);
    return res;
  }

  int exec_errno = 0;
  ssize_t n;
  while ((n = ::read(err_r, &exec_errno, sizeof(exec_errno))) < 0 &&
         errno == EINTR) {
  }
  close_fd(err_r);
  if (n > 0) {
    close_fd(out_r);
    wait_child(pid, res);
    res.started = false;
    return res;
  }
  res.started = true;

  using clock = std::chrono::steady_clock;
  auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(timeout_seconds));
  char buf[4096];
  while (true) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - clock::now())
                         .count();
    if (remaining <= 0) {
      res.timed_out = true;
      break;
    }
    pollfd pfd{out_r, POLLIN, 0};
    int pr = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (pr == 0) {
      res.timed_out = true;
      break;
    }
    ssize_t got = ::read(out_r, buf, sizeof(buf));
    if (got < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (got == 0) break;
    res.output.append(buf, static_cast<std::size_t>(got));
  }
  close_fd(out_r);
  // The child may close stdout before exiting; keep honouring the deadline.
  useconds_t nap = 50;
  while (!res.timed_out) {
    int status = 0;
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      if (WIFEXITED(status)) {
        res.exit_code = WEXITSTATUS(status);
      } else if (WIFSIGNALED(status)) {
        res.signaled = true;
        res.exit_code = 128 + WTERMSIG(status);
      }
      return res;
    }
    if (r < 0 && errno != EINTR) return res;
    if (clock::now() >= deadline) {
      res.timed_out = true;
      break;
    }
    ::usleep(nap);
    nap = std::min<useconds_t>(nap * 2, 2000);
  }
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
  wait_child(pid, res);
  return res;
}

}  // namespace cpt
