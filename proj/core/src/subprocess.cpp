#include "mgdbg/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

namespace mgdbg {

namespace {

void close_fd(int &fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

// Drains whatever is ready on fd into buf; returns false on EOF.
bool drain(int fd, std::string &buf) {
  char chunk[4096];
  for (;;) {
    ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n > 0) {
      buf.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) return false;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
    if (errno == EINTR) continue;
    return false;
  }
}

}  // namespace

RunResult run_process(const std::vector<std::string> &argv, const RunLimits &limits) {
  RunResult result;
  if (argv.empty()) {
    result.spawn_failed = true;
    return result;
  }

  int out_pipe[2] = {-1, -1};
  int err_pipe[2] = {-1, -1};
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    result.spawn_failed = true;
    close_fd(out_pipe[0]); close_fd(out_pipe[1]);
    close_fd(err_pipe[0]); close_fd(err_pipe[1]);
    return result;
  }

  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    result.spawn_failed = true;
    close_fd(out_pipe[0]); close_fd(out_pipe[1]);
    close_fd(err_pipe[0]); close_fd(err_pipe[1]);
    return result;
  }

  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(out_pipe[0]); ::close(out_pipe[1]);
    ::close(err_pipe[0]); ::close(err_pipe[1]);

    if (limits.memory_bytes > 0) {
      rlimit rl{limits.memory_bytes, limits.memory_bytes};
      ::setrlimit(RLIMIT_AS, &rl);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);
    if (!limits.workdir.empty() && ::chdir(limits.workdir.c_str()) != 0) _exit(125);

    std::vector<char *> args;
    args.reserve(argv.size() + 1);
    for (const std::string &a : argv) args.push_back(const_cast<char *>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    // Exec failed: 127 mirrors shell behavior for a missing binary.
    _exit(127);
  }

  ::setpgid(pid, pid);  // avoid a race with the child's own setpgid
  close_fd(out_pipe[1]);
  close_fd(err_pipe[1]);
  ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  auto deadline = start + limits.wall_timeout;
  bool out_open = true;
  bool err_open = true;
  bool killed = false;

  while (out_open || err_open) {
    pollfd fds[2];
    nfds_t nfds = 0;
    if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
    if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};

    auto now = std::chrono::steady_clock::now();
    int wait_ms = killed ? 100
                         : static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                deadline - now)
                                                .count());
    if (!killed && wait_ms <= 0) {
      ::kill(-pid, SIGKILL);
      killed = true;
      result.timed_out = true;
      continue;
    }
    int rc = ::poll(fds, nfds, killed ? 100 : wait_ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) {
      if (!killed) {
        ::kill(-pid, SIGKILL);
        killed = true;
        result.timed_out = true;
      }
      continue;
    }
    for (nfds_t i = 0; i < nfds; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      if (fds[i].fd == out_pipe[0]) {
        if (!drain(out_pipe[0], result.out)) {
          close_fd(out_pipe[0]);
          out_open = false;
        }
      } else {
        if (!drain(err_pipe[0], result.err)) {
          close_fd(err_pipe[0]);
          err_open = false;
        }
      }
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    if (result.exit_code == 127) result.spawn_failed = true;
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  close_fd(out_pipe[0]);
  close_fd(err_pipe[0]);
  return result;
}

}  // namespace mgdbg
