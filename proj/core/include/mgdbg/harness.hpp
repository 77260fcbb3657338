#ifndef MGDBG_HARNESS_HPP
#define MGDBG_HARNESS_HPP

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgdbg/debugger.hpp"
#include "mgdbg/executors.hpp"
#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/testgen.hpp"

namespace mgdbg {

enum class DatasetKind { humaneval, mbpp, humanevalfix };
DatasetKind dataset_kind_from_name(const std::string &name);

struct BenchmarkProblem {
  std::string task_id;
  std::string prompt;
  std::string entry_point;
  PublicTestSet visible_tests;
  PublicTestSet hidden_tests;
  std::string category;            // HumanEvalFix bug category, empty otherwise
  std::string canonical_solution;  // complete program text when the dataset has one
  std::string provided_seed;       // HumanEvalFix ships the buggy program
};

struct SeedProgram {
  std::string task_id;
  std::string code;
  bool passes_hidden = false;
};

// Parses a dataset JSONL file and applies its visible/hidden split rule.
// Throws SchemaError naming the offending record index.
std::vector<BenchmarkProblem> load_benchmark(const std::string &path, DatasetKind kind);

// JSONL of {task_id, code}.
std::vector<SeedProgram> load_seeds(const std::string &path);

// "assert f(...) == ..." texts from the ">>> f(...)" examples in a task
// description docstring.
std::vector<std::string> extract_docstring_tests(const std::string &prompt);

// Assert lines of a HumanEval-style `def check(candidate)` test program with
// `candidate` substituted; empty when the body is not plain asserts (the
// caller then runs the whole program as one block).
std::vector<std::string> extract_check_asserts(const std::string &test_code,
                                               const std::string &entry_point);

// --------------------------------------------------------------- metrics

struct CategoryStat {
  int buggy = 0;
  int fixed = 0;
  std::optional<double> rsr;
};

struct MetricsSummary {
  int total = 0;
  int seed_correct = 0;
  int buggy = 0;
  int fixed = 0;
  double accuracy = 0.0;
  std::optional<double> rsr;
  std::vector<double> per_attempt_cumulative_rsr;  // index 0 = after attempt 1
  std::map<std::string, CategoryStat> per_category;
  std::map<std::string, CategoryStat> per_bucket;
};

struct ProblemOutcome {
  std::string task_id;
  bool seed_correct = false;
  bool hidden_fixed = false;     // final code passes the hidden tests
  int first_fixed_attempt = 0;   // 1-based; 0 = never
  int attempts_used = 0;
  bool session_fixed = false;    // visible tests passed during debugging
  std::string category;
  std::string bucket;
  bool quarantined = false;
  std::string error;
};

// Pure metric arithmetic over precomputed counts.
MetricsSummary metrics_from_counts(int total, int seed_correct, int fixed);

MetricsSummary compute_metrics(const std::vector<ProblemOutcome> &outcomes,
                               int max_attempts);

// Buckets every seed by whitespace token count at the 1/3 and 2/3 quantiles;
// ties go to the lower bucket.
std::map<std::string, std::string> bucket_by_length(const std::vector<SeedProgram> &seeds);

// --------------------------------------------------------------- campaign

struct BackendSpec {
  enum class Kind { live, replay, stub };
  Kind kind = Kind::stub;
  std::string cache_path;               // replay source
  std::string record_path;              // append-only record target
  std::vector<std::string> script;      // scripted stub replies
  std::shared_ptr<ChatBackend> custom;  // overrides kind when set
};

std::shared_ptr<ChatBackend> make_backend(const BackendSpec &spec);

struct CampaignConfig {
  LLMConfig llm;
  DebugConfig debug;
  BackendSpec backend;
  SandboxPolicy sandbox;
  std::string out_dir;
  std::string run_id;  // defaults to the strategy name
  int jobs = 1;
  bool persist_sessions = true;
  std::atomic<bool> *stop_flag = nullptr;  // set to interrupt gracefully
};

struct CampaignReport {
  MetricsSummary metrics;
  std::vector<ProblemOutcome> outcomes;  // sorted by task_id
  std::vector<std::string> warnings;
};

// Debugs every buggy seed under the configured strategy; failures quarantine
// the problem (counted unfixed) without stopping the run.
CampaignReport run_campaign(const std::vector<BenchmarkProblem> &problems,
                            const std::vector<SeedProgram> &seeds,
                            const CampaignConfig &cfg);

// metrics.csv, curves.csv, campaign_report.json under cfg.out_dir.
void write_campaign_outputs(const CampaignReport &report, const CampaignConfig &cfg);

std::string format_metrics_table(const MetricsSummary &metrics);

}  // namespace mgdbg

#endif  // MGDBG_HARNESS_HPP
