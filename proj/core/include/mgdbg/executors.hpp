#ifndef MGDBG_EXECUTORS_HPP
#define MGDBG_EXECUTORS_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/testgen.hpp"

namespace mgdbg {

enum class Verdict { pass, fail, error, timeout };
const char *verdict_name(Verdict v);
Verdict verdict_from_name(const std::string &name);

struct TestOutcome {
  int test_index = 0;
  Verdict verdict = Verdict::error;
  std::string detail;  // assertion message / exception / simulated trace excerpt
};

struct ExecutionReport {
  enum class Mode { simulated, real };
  std::string unit;
  Mode mode = Mode::real;
  std::vector<TestOutcome> results;
  std::string narrative;  // simulated analysis text, empty in real mode
  bool cached = false;    // verdicts carried over from a previous attempt

  bool all_passed() const;
};

struct SandboxPolicy {
  std::chrono::milliseconds timeout_per_test{10000};
  std::uint64_t memory_cap = 512ull * 1024 * 1024;
  bool network_forbidden = true;  // isolation is process + rlimits; no netns
  std::string workdir_base;       // empty = system temp dir
  std::string interpreter = "python3";
};

/// Runs subject code for real: one interpreter process per test in an
/// isolated temp directory, classified into pass/fail/error/timeout.
class RealExecutor {
 public:
  explicit RealExecutor(SandboxPolicy policy = {});

  const SandboxPolicy &policy() const { return policy_; }

  ExecutionReport run_tests(const std::string &full_source,
                            const std::vector<SubTestCase> &tests,
                            const std::string &unit) const;
  ExecutionReport run_assertions(const std::string &full_source,
                                 const std::vector<std::string> &assertions,
                                 const std::string &unit) const;

  // Final scoring; the only place hidden tests are ever executed.
  bool score_hidden(const std::string &final_source, const PublicTestSet &hidden) const;

  // nullopt when the source byte-compiles, else the compiler message.
  std::optional<std::string> syntax_error(const std::string &source) const;

  struct TracedOutcome {
    Verdict verdict = Verdict::error;
    std::string detail;
    std::string trace;  // line-level variable states inside the subject
  };
  TracedOutcome run_traced(const std::string &full_source,
                           const std::string &assertion) const;

  // repr(expr) evaluated against the source, or "raised <ExceptionName>".
  std::string eval_repr(const std::string &full_source, const std::string &expr) const;

 private:
  SandboxPolicy policy_;
};

/// Asks the LLM to act as an interpreter over the unit and its tests; the
/// reply must end in one VERDICT line per test.
class SimulatedExecutor {
 public:
  explicit SimulatedExecutor(Gateway &gateway) : gateway_(&gateway) {}

  // context_source: already-debugged descendants, appended after the unit.
  // Throws SimulationFormatError after the gateway's format retries.
  ExecutionReport simulate(const std::string &unit_name, const std::string &unit_source,
                           const std::string &context_source,
                           const std::vector<SubTestCase> &tests);

 private:
  Gateway *gateway_;
};

// Parses "VERDICT <i>: PASS|FAIL ..." trailer lines; requires one verdict
// per test index. Exposed for fixture tooling.
ExecutionReport parse_verdict_trailer(const std::string &reply, const std::string &unit,
                                      std::size_t test_count);

struct BreakpointAccuracy {
  int matched = 0;
  int total = 0;
  double accuracy() const { return total ? static_cast<double>(matched) / total : 0.0; }
};

// Predicted per-test values (LLM checkpoint lines) against an instrumented
// real evaluation of each test's call expression.
BreakpointAccuracy compare_traces(const std::string &unit_name,
                                  const std::string &full_source,
                                  const std::vector<SubTestCase> &tests, Gateway &gateway,
                                  const RealExecutor &real);

// Prompt-side formatting helpers shared by the debugger.
std::string format_test_lines(const std::vector<SubTestCase> &tests);
std::string format_report_for_repair(const ExecutionReport &report,
                                     const std::vector<SubTestCase> &tests);

}  // namespace mgdbg

#endif  // MGDBG_EXECUTORS_HPP
