#include "mgdbg/executors.hpp"

#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mgdbg/errors.hpp"
#include "mgdbg/subprocess.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

namespace fs = std::filesystem;

const char *verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::error: return "error";
    case Verdict::timeout: return "timeout";
  }
  return "error";
}

Verdict verdict_from_name(const std::string &name) {
  if (name == "pass") return Verdict::pass;
  if (name == "fail") return Verdict::fail;
  if (name == "timeout") return Verdict::timeout;
  return Verdict::error;
}

bool ExecutionReport::all_passed() const {
  for (const TestOutcome &r : results)
    if (r.verdict != Verdict::pass) return false;
  return true;
}

namespace {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string &base) {
    fs::path root = base.empty() ? fs::temp_directory_path() : fs::path(base);
    fs::create_directories(root);
    std::string templ = (root / "mgdbg.XXXXXX").string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data()))
      throw Error(ErrorKind::config_error, "cannot create temp dir under " + root.string());
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream out(path);
  out << content;
}

std::string tail_of(const std::string &text, std::size_t max_bytes = 1200) {
  std::string_view t = trim(text);
  if (t.size() <= max_bytes) return std::string(t);
  return "..." + std::string(t.substr(t.size() - max_bytes));
}

RunLimits limits_for(const SandboxPolicy &policy, const std::string &workdir) {
  RunLimits limits;
  limits.wall_timeout = policy.timeout_per_test;
  limits.memory_bytes = policy.memory_cap;
  limits.workdir = workdir;
  return limits;
}

TestOutcome classify(const RunResult &run, int index, const std::string &interpreter,
                     const SandboxPolicy &policy) {
  if (run.spawn_failed)
    throw Error(ErrorKind::interpreter_missing,
                "cannot execute \"" + interpreter + "\" (not on PATH?)");
  TestOutcome outcome;
  outcome.test_index = index;
  if (run.timed_out) {
    outcome.verdict = Verdict::timeout;
    outcome.detail = "timed out after " +
                     std::to_string(policy.timeout_per_test.count()) + " ms";
  } else if (run.exit_code == 0) {
    outcome.verdict = Verdict::pass;
  } else if (run.err.find("AssertionError") != std::string::npos) {
    outcome.verdict = Verdict::fail;
    outcome.detail = tail_of(run.err);
  } else {
    outcome.verdict = Verdict::error;
    outcome.detail = run.err.empty() ? "exit code " + std::to_string(run.exit_code)
                                     : tail_of(run.err);
  }
  return outcome;
}

// Runner used for instrumented execution: loads the subject, runs the
// assertion under sys.settrace and prints per-line variable states.
const char *kTraceRunner = R"PY(
import sys

with open(sys.argv[1]) as fh:
    subject_src = fh.read()
with open(sys.argv[2]) as fh:
    assertion_src = fh.read()

trace = []
LIMIT = 400

def _fmt(value):
    try:
        r = repr(value)
    except Exception:
        r = "<unrepresentable>"
    return r if len(r) <= 80 else r[:77] + "..."

def _tracer(frame, event, arg):
    if event == "call":
        return _tracer if frame.f_code.co_filename == "<subject>" else None
    if event == "line" and frame.f_code.co_filename == "<subject>" and len(trace) < LIMIT:
        items = ", ".join(
            "%s=%s" % (k, _fmt(v))
            for k, v in sorted(frame.f_locals.items())
            if not k.startswith("__"))
        trace.append("line %d in %s: %s" % (frame.f_lineno, frame.f_code.co_name, items))
    return _tracer

env = {"__name__": "__mgdbg__"}
exec(compile(subject_src, "<subject>", "exec"), env)
check = compile(assertion_src, "<assertion>", "exec")
sys.settrace(_tracer)
try:
    exec(check, env)
finally:
    sys.settrace(None)
    sys.stdout.write("### TRACE BEGIN\n")
    for line in trace:
        sys.stdout.write(line + "\n")
    sys.stdout.write("### TRACE END\n")
)PY";

// Runner that evaluates one expression and prints its repr (or the raised
// exception type), used for checkpoint comparison.
const char *kEvalRunner = R"PY(
import sys

with open(sys.argv[1]) as fh:
    subject_src = fh.read()
with open(sys.argv[2]) as fh:
    expr_src = fh.read()

env = {"__name__": "__mgdbg__"}
exec(compile(subject_src, "<subject>", "exec"), env)
try:
    value = eval(compile(expr_src.strip(), "<expr>", "eval"), env)
    sys.stdout.write("### VALUE " + repr(value) + "\n")
except Exception as exc:
    sys.stdout.write("### RAISED " + type(exc).__name__ + "\n")
)PY";

}  // namespace

RealExecutor::RealExecutor(SandboxPolicy policy) : policy_(std::move(policy)) {}

ExecutionReport RealExecutor::run_assertions(const std::string &full_source,
                                             const std::vector<std::string> &assertions,
                                             const std::string &unit) const {
  ExecutionReport report;
  report.unit = unit;
  report.mode = ExecutionReport::Mode::real;

  TempDir dir(policy_.workdir_base);
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    fs::path script = dir.path() / ("test_" + std::to_string(i) + ".py");
    write_file(script, full_source + "\n\n" + assertions[i] + "\n");
    RunResult run = run_process({policy_.interpreter, "-B", script.string()},
                                limits_for(policy_, dir.path().string()));
    report.results.push_back(classify(run, static_cast<int>(i), policy_.interpreter, policy_));
  }
  return report;
}

ExecutionReport RealExecutor::run_tests(const std::string &full_source,
                                        const std::vector<SubTestCase> &tests,
                                        const std::string &unit) const {
  std::vector<std::string> assertions;
  assertions.reserve(tests.size());
  for (const SubTestCase &t : tests) assertions.push_back(t.render());
  return run_assertions(full_source, assertions, unit);
}

bool RealExecutor::score_hidden(const std::string &final_source,
                                const PublicTestSet &hidden) const {
  ExecutionReport report = run_assertions(final_source, hidden.tests, "<hidden>");
  return report.all_passed();
}

std::optional<std::string> RealExecutor::syntax_error(const std::string &source) const {
  TempDir dir(policy_.workdir_base);
  fs::path script = dir.path() / "subject.py";
  write_file(script, source);
  RunResult run = run_process({policy_.interpreter, "-B", "-m", "py_compile", script.string()},
                              limits_for(policy_, dir.path().string()));
  if (run.spawn_failed)
    throw Error(ErrorKind::interpreter_missing,
                "cannot execute \"" + policy_.interpreter + "\" (not on PATH?)");
  if (run.timed_out) return "timed out while compiling";
  if (run.exit_code == 0) return std::nullopt;
  return tail_of(run.err);
}

RealExecutor::TracedOutcome RealExecutor::run_traced(const std::string &full_source,
                                                     const std::string &assertion) const {
  TempDir dir(policy_.workdir_base);
  fs::path runner = dir.path() / "runner.py";
  fs::path subject = dir.path() / "subject.py";
  fs::path check = dir.path() / "assertion.py";
  write_file(runner, kTraceRunner);
  write_file(subject, full_source);
  write_file(check, assertion + "\n");

  RunResult run = run_process(
      {policy_.interpreter, "-B", runner.string(), subject.string(), check.string()},
      limits_for(policy_, dir.path().string()));
  TestOutcome outcome = classify(run, 0, policy_.interpreter, policy_);

  TracedOutcome traced;
  traced.verdict = outcome.verdict;
  traced.detail = outcome.detail;
  std::size_t begin = run.out.find("### TRACE BEGIN\n");
  std::size_t end = run.out.find("### TRACE END");
  if (begin != std::string::npos && end != std::string::npos && end > begin) {
    begin += 16;
    traced.trace = std::string(trim(run.out.substr(begin, end - begin)));
  }
  return traced;
}

std::string RealExecutor::eval_repr(const std::string &full_source,
                                    const std::string &expr) const {
  TempDir dir(policy_.workdir_base);
  fs::path runner = dir.path() / "runner.py";
  fs::path subject = dir.path() / "subject.py";
  fs::path expr_file = dir.path() / "expr.py";
  write_file(runner, kEvalRunner);
  write_file(subject, full_source);
  write_file(expr_file, expr + "\n");

  RunResult run = run_process(
      {policy_.interpreter, "-B", runner.string(), subject.string(), expr_file.string()},
      limits_for(policy_, dir.path().string()));
  if (run.spawn_failed)
    throw Error(ErrorKind::interpreter_missing,
                "cannot execute \"" + policy_.interpreter + "\" (not on PATH?)");
  if (run.timed_out) return "timed out";
  std::size_t v = run.out.find("### VALUE ");
  if (v != std::string::npos)
    return std::string(trim(run.out.substr(v + 10)));
  std::size_t r = run.out.find("### RAISED ");
  if (r != std::string::npos)
    return "raised " + std::string(trim(run.out.substr(r + 11)));
  return "error: " + tail_of(run.err, 200);
}

// ------------------------------------------------------------ simulated

ExecutionReport parse_verdict_trailer(const std::string &reply, const std::string &unit,
                                      std::size_t test_count) {
  ExecutionReport report;
  report.unit = unit;
  report.mode = ExecutionReport::Mode::simulated;
  report.results.assign(test_count, TestOutcome{});
  std::vector<bool> seen(test_count, false);

  std::size_t first_verdict_pos = std::string::npos;
  std::size_t offset = 0;
  for (const std::string &line : split_lines(reply)) {
    std::string_view t = trim(line);
    if (t.size() >= 7 && (t.substr(0, 7) == "VERDICT" || t.substr(0, 7) == "Verdict" ||
                          t.substr(0, 7) == "verdict")) {
      if (first_verdict_pos == std::string::npos) first_verdict_pos = offset;
      std::string_view rest = trim(t.substr(7));
      std::size_t d = 0;
      while (d < rest.size() && std::isdigit(static_cast<unsigned char>(rest[d]))) ++d;
      if (d > 0) {
        int index = std::stoi(std::string(rest.substr(0, d)));
        std::string_view after = trim(rest.substr(d));
        if (!after.empty() && after.front() == ':') after = trim(after.substr(1));
        std::string upper;
        for (char c : after) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (index >= 0 && static_cast<std::size_t>(index) < test_count) {
          TestOutcome &out = report.results[static_cast<std::size_t>(index)];
          out.test_index = index;
          if (upper.substr(0, 4) == "PASS") {
            out.verdict = Verdict::pass;
            out.detail = "";
            seen[static_cast<std::size_t>(index)] = true;
          } else if (upper.substr(0, 4) == "FAIL") {
            out.verdict = Verdict::fail;
            std::string_view reason = after.substr(std::min<std::size_t>(4, after.size()));
            for (;;) {
              if (!reason.empty() && (reason.front() == '-' || reason.front() == ':' ||
                                      reason.front() == ' ')) {
                reason = reason.substr(1);
              } else if (reason.size() >= 3 &&
                         static_cast<unsigned char>(reason[0]) == 0xe2 &&
                         static_cast<unsigned char>(reason[1]) == 0x80) {
                reason = reason.substr(3);  // em/en dash
              } else {
                break;
              }
            }
            out.detail = std::string(trim(reason));
            seen[static_cast<std::size_t>(index)] = true;
          }
        }
      }
    }
    offset += line.size() + 1;
  }

  for (std::size_t i = 0; i < test_count; ++i) {
    if (!seen[i])
      throw Error(ErrorKind::simulation_format_error,
                  "no VERDICT line for test " + std::to_string(i));
    report.results[i].test_index = static_cast<int>(i);
  }
  report.narrative = first_verdict_pos == std::string::npos
                         ? std::string(trim(reply))
                         : std::string(trim(reply.substr(0, first_verdict_pos)));
  return report;
}

ExecutionReport SimulatedExecutor::simulate(const std::string &unit_name,
                                            const std::string &unit_source,
                                            const std::string &context_source,
                                            const std::vector<SubTestCase> &tests) {
  std::string function_code = unit_source;
  if (!is_blank(context_source)) {
    function_code += "\n\n# Functions called by ";
    function_code += unit_name;
    function_code += " (already verified):\n\n";
    function_code += context_source;
  }
  RenderedPrompt prompt = render_prompt(
      TemplateId::debug,
      {{"function_code", function_code}, {"test_case_results", format_test_lines(tests)}});
  prompt.user += "\n\n";
  prompt.user += kVerdictTrailerInstruction;

  std::string unit_copy = unit_name;
  std::size_t count = tests.size();
  return complete_with_retries<ExecutionReport>(
      *gateway_, TemplateId::debug, PromptPurpose::simulate, prompt,
      [unit_copy, count](const std::string &reply) {
        return parse_verdict_trailer(reply, unit_copy, count);
      });
}

BreakpointAccuracy compare_traces(const std::string &unit_name,
                                  const std::string &full_source,
                                  const std::vector<SubTestCase> &tests, Gateway &gateway,
                                  const RealExecutor &real) {
  RenderedPrompt prompt = render_prompt(
      TemplateId::debug,
      {{"function_code", full_source}, {"test_case_results", format_test_lines(tests)}});
  prompt.user += "\n\n";
  prompt.user += kCheckpointTrailerInstruction;

  std::size_t count = tests.size();
  auto parse = [count](const std::string &reply) {
    std::vector<std::string> predicted(count);
    std::vector<bool> seen(count, false);
    for (const std::string &line : split_lines(reply)) {
      std::string_view t = trim(line);
      if (t.substr(0, 10) != "CHECKPOINT") continue;
      std::string_view rest = trim(t.substr(10));
      std::size_t d = 0;
      while (d < rest.size() && std::isdigit(static_cast<unsigned char>(rest[d]))) ++d;
      if (d == 0) continue;
      int index = std::stoi(std::string(rest.substr(0, d)));
      std::string_view value = trim(rest.substr(d));
      if (!value.empty() && value.front() == ':') value = trim(value.substr(1));
      if (index >= 0 && static_cast<std::size_t>(index) < count) {
        predicted[static_cast<std::size_t>(index)] = std::string(value);
        seen[static_cast<std::size_t>(index)] = true;
      }
    }
    for (std::size_t i = 0; i < count; ++i)
      if (!seen[i])
        throw Error(ErrorKind::simulation_format_error,
                    "no CHECKPOINT line for test " + std::to_string(i));
    return predicted;
  };
  std::vector<std::string> predicted =
      complete_with_retries<std::vector<std::string>>(
          gateway, TemplateId::debug, PromptPurpose::trace_predict, prompt, parse);

  BreakpointAccuracy acc;
  acc.total = static_cast<int>(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    std::string actual = real.eval_repr(full_source, tests[i].call_expr);
    if (std::string(trim(predicted[i])) == actual) ++acc.matched;
  }
  (void)unit_name;
  return acc;
}

// ------------------------------------------------------------ formatting

std::string format_test_lines(const std::vector<SubTestCase> &tests) {
  std::ostringstream out;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (i) out << "\n";
    out << "Test case " << i << ": " << tests[i].render();
  }
  return out.str();
}

std::string format_report_for_repair(const ExecutionReport &report,
                                     const std::vector<SubTestCase> &tests) {
  std::ostringstream out;
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const TestOutcome &r = report.results[i];
    if (i) out << "\n";
    if (i < tests.size()) out << "Test case " << i << ": " << tests[i].render() << "\n";
    out << "Result: ";
    std::string v = verdict_name(r.verdict);
    for (char &c : v) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out << v;
    if (!r.detail.empty()) out << " - " << r.detail;
    out << "\n";
  }
  if (!report.narrative.empty())
    out << "\nSimulated execution trace:\n" << report.narrative << "\n";
  return out.str();
}

}  // namespace mgdbg
