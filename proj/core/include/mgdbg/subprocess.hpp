#ifndef MGDBG_SUBPROCESS_HPP
#define MGDBG_SUBPROCESS_HPP

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace mgdbg {

struct RunLimits {
  std::chrono::milliseconds wall_timeout{10000};
  std::uint64_t memory_bytes = 512ull * 1024 * 1024;  // RLIMIT_AS, 0 = unlimited
  std::string workdir;                                // empty = inherit
};

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  bool spawn_failed = false;  // executable not found / exec error
  std::string out;
  std::string err;
  std::chrono::milliseconds elapsed{0};
};

// Runs argv[0] with the given arguments in its own process group, killing
// the whole group on timeout. Stdout/stderr are captured.
RunResult run_process(const std::vector<std::string> &argv, const RunLimits &limits);

}  // namespace mgdbg

#endif  // MGDBG_SUBPROCESS_HPP
