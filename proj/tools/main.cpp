#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mgdbg/debugger.hpp"
#include "mgdbg/errors.hpp"
#include "mgdbg/harness.hpp"
#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/session_json.hpp"
#include "mgdbg/text_util.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_sigint(int) { g_stop.store(true); }

struct CommonOptions {
  // LLM / backend
  std::string endpoint;
  std::string api_key;
  std::string model = "local-model";
  double temperature = 0.8;
  int max_tokens = 2048;
  long timeout_ms = 120000;
  int format_retries = 3;
  std::string backend = "stub";
  std::string cache;
  std::string record;
  std::string stub_script;

  // debugging
  std::string strategy = "hierarchical";
  int max_attempts = 10;
  int fix_retries = 3;
  bool strict_validation = false;

  // sandbox
  long test_timeout_ms = 10000;
  long memory_mb = 512;
  std::string interpreter = "python3";
};

void add_common_options(CLI::App &cmd, CommonOptions &opt) {
  cmd.add_option("--endpoint", opt.endpoint, "OpenAI-compatible base URL")
      ->envname("MGDBG_ENDPOINT");
  cmd.add_option("--api-key", opt.api_key, "Bearer token for the endpoint")
      ->envname("MGDBG_API_KEY");
  cmd.add_option("--model", opt.model, "Model id sent with each request")
      ->envname("MGDBG_MODEL");
  cmd.add_option("--temperature", opt.temperature, "Sampling temperature")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  cmd.add_option("--max-tokens", opt.max_tokens, "Completion token limit")
      ->capture_default_str();
  cmd.add_option("--timeout-ms", opt.timeout_ms, "LLM request timeout (ms)")
      ->capture_default_str();
  cmd.add_option("--format-retries", opt.format_retries,
                 "Tries per prompt before a malformed reply becomes an error")
      ->capture_default_str();

  cmd.add_option("--backend", opt.backend, "LLM backend: live, replay or stub")
      ->check(CLI::IsMember({"live", "replay", "stub"}))
      ->capture_default_str();
  cmd.add_option("--cache", opt.cache, "Replay cache (JSONL of prompt records)");
  cmd.add_option("--record", opt.record, "Append every prompt record to this cache");
  cmd.add_option("--stub-script", opt.stub_script,
                 "JSON array of replies for the stub backend");

  cmd.add_option("--strategy", opt.strategy, "Debugging strategy")
      ->check(CLI::IsMember({"hierarchical", "holistic_simple_feedback",
                             "holistic_no_decomposition", "no_simulated_execution",
                             "no_testgen", "real_execution_trace"}))
      ->capture_default_str();
  cmd.add_option("--max-attempts", opt.max_attempts,
                 "Debugging iterations (bottom-up traversals) per problem")
      ->capture_default_str();
  cmd.add_option("--fix-retries", opt.fix_retries, "Repair tries per unit per attempt")
      ->capture_default_str();
  cmd.add_flag("--strict-validation", opt.strict_validation,
               "Reject decompositions that change visible-test behavior");

  cmd.add_option("--test-timeout-ms", opt.test_timeout_ms, "Per-test wall clock limit (ms)")
      ->capture_default_str();
  cmd.add_option("--memory-mb", opt.memory_mb, "Per-test address-space limit (MiB)")
      ->capture_default_str();
  cmd.add_option("--interpreter", opt.interpreter, "Subject-language interpreter binary")
      ->capture_default_str();
}

mgdbg::LLMConfig llm_config(const CommonOptions &opt) {
  mgdbg::LLMConfig cfg;
  cfg.endpoint = opt.endpoint;
  cfg.api_key = opt.api_key;
  cfg.model_id = opt.model;
  cfg.temperature = opt.temperature;
  cfg.max_tokens = opt.max_tokens;
  cfg.request_timeout = std::chrono::milliseconds(opt.timeout_ms);
  cfg.max_format_retries = opt.format_retries;
  return cfg;
}

mgdbg::DebugConfig debug_config(const CommonOptions &opt) {
  mgdbg::DebugConfig cfg;
  cfg.strategy = mgdbg::strategy_from_name(opt.strategy);
  cfg.max_attempts = opt.max_attempts;
  cfg.per_unit_fix_retries = opt.fix_retries;
  cfg.strict_validation = opt.strict_validation;
  return cfg;
}

mgdbg::SandboxPolicy sandbox_policy(const CommonOptions &opt) {
  mgdbg::SandboxPolicy policy;
  policy.timeout_per_test = std::chrono::milliseconds(opt.test_timeout_ms);
  policy.memory_cap = static_cast<std::uint64_t>(opt.memory_mb) * 1024 * 1024;
  policy.interpreter = opt.interpreter;
  return policy;
}

mgdbg::BackendSpec backend_spec(const CommonOptions &opt, bool force_live) {
  mgdbg::BackendSpec spec;
  std::string kind = force_live ? "live" : opt.backend;
  if (kind == "live") spec.kind = mgdbg::BackendSpec::Kind::live;
  else if (kind == "replay") spec.kind = mgdbg::BackendSpec::Kind::replay;
  else spec.kind = mgdbg::BackendSpec::Kind::stub;
  spec.cache_path = opt.cache;
  spec.record_path = opt.record;
  if (!opt.stub_script.empty()) {
    std::ifstream in(opt.stub_script);
    if (!in)
      throw mgdbg::Error(mgdbg::ErrorKind::config_error,
                         "cannot open stub script " + opt.stub_script);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, true);
    for (const auto &item : j) spec.script.push_back(item.get<std::string>());
  }
  return spec;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw mgdbg::Error(mgdbg::ErrorKind::config_error, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_debug(const CommonOptions &opt, const std::string &code_path,
              const std::string &tests_path, const std::string &entry,
              const std::string &out_path) {
  std::string code = read_file(code_path);

  mgdbg::PublicTestSet visible;
  for (const std::string &line : mgdbg::split_lines(read_file(tests_path))) {
    auto t = mgdbg::trim(line);
    if (t.empty() || t.front() == '#') continue;
    visible.tests.emplace_back(t);
  }
  if (visible.empty())
    throw mgdbg::Error(mgdbg::ErrorKind::config_error,
                       "no visible tests in " + tests_path);

  auto backend = mgdbg::make_backend(backend_spec(opt, false));
  std::shared_ptr<mgdbg::RecordSink> recorder;
  if (!opt.record.empty()) recorder = std::make_shared<mgdbg::RecordSink>(opt.record);

  mgdbg::Gateway gateway(llm_config(opt), backend, recorder);
  mgdbg::RealExecutor real(sandbox_policy(opt));
  mgdbg::Debugger debugger(gateway, real, debug_config(opt));

  mgdbg::DebugSession session = debugger.run_session(
      std::filesystem::path(code_path).stem().string(), code, entry, visible);

  {
    std::ofstream out(out_path);
    if (!out)
      throw mgdbg::Error(mgdbg::ErrorKind::config_error, "cannot write " + out_path);
    out << session.final_code;
  }
  mgdbg::save_session(session, out_path + ".session.json");

  std::cout << (session.fixed ? "fixed" : "unfixed") << " after "
            << session.attempts.size() << " attempt(s); wrote " << out_path << "\n";
  return session.fixed ? 0 : 2;
}

// Convenience: produce a seeds file by asking the model to complete each
// task description. Decoupled from the debugging pipeline's record/replay.
int run_seed(const CommonOptions &opt, const std::string &dataset_path,
             const std::string &kind_name, const std::string &out_path) {
  mgdbg::DatasetKind kind = mgdbg::dataset_kind_from_name(kind_name);
  std::vector<mgdbg::BenchmarkProblem> problems = mgdbg::load_benchmark(dataset_path, kind);

  auto backend = mgdbg::make_backend(backend_spec(opt, false));
  mgdbg::LLMConfig cfg = llm_config(opt);

  std::ofstream out(out_path);
  if (!out)
    throw mgdbg::Error(mgdbg::ErrorKind::config_error, "cannot write " + out_path);

  int written = 0;
  for (const mgdbg::BenchmarkProblem &problem : problems) {
    if (g_stop.load()) break;
    std::string user =
        "Complete the following Python function. Provide the complete function "
        "in a Python code block.\n\n" +
        problem.prompt;
    std::string hash = mgdbg::prompt_content_hash(mgdbg::TemplateId::simple_feedback, "",
                                                  user, cfg.model_id, cfg.temperature);
    try {
      std::string reply = backend->complete(cfg, hash, "", user);
      std::string code = mgdbg::extract_code_block(reply);
      nlohmann::json record;
      record["task_id"] = problem.task_id;
      record["code"] = code;
      out << record.dump() << "\n";
      ++written;
    } catch (const mgdbg::Error &e) {
      std::cerr << problem.task_id << ": " << e.what() << "\n";
    }
  }
  std::cout << "wrote " << written << "/" << problems.size() << " seeds to " << out_path
            << "\n";
  return written > 0 ? 0 : 1;
}

int run_bench(const CommonOptions &opt, const std::string &dataset_path,
              const std::string &kind_name, const std::string &seeds_path,
              const std::string &out_dir, int jobs, bool force_live) {
  mgdbg::DatasetKind kind = mgdbg::dataset_kind_from_name(kind_name);
  std::vector<mgdbg::BenchmarkProblem> problems = mgdbg::load_benchmark(dataset_path, kind);
  std::vector<mgdbg::SeedProgram> seeds;
  if (!seeds_path.empty()) seeds = mgdbg::load_seeds(seeds_path);

  mgdbg::CampaignConfig cfg;
  cfg.llm = llm_config(opt);
  cfg.debug = debug_config(opt);
  cfg.backend = backend_spec(opt, force_live);
  cfg.sandbox = sandbox_policy(opt);
  cfg.out_dir = out_dir;
  cfg.jobs = jobs;
  cfg.stop_flag = &g_stop;

  mgdbg::CampaignReport report = mgdbg::run_campaign(problems, seeds, cfg);
  mgdbg::write_campaign_outputs(report, cfg);

  std::cout << mgdbg::format_metrics_table(report.metrics);
  if (!report.warnings.empty())
    std::cout << report.warnings.size() << " warning(s); see campaign_report.json\n";
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  std::signal(SIGINT, on_sigint);

  CLI::App app{"mgdbg: hierarchical bottom-up debugger for LLM-generated Python"};
  app.name("mgdbg");
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with key=value lines");
  app.allow_config_extras(true);
  app.set_version_flag("--version", "mgdbg 0.1.0");

  CommonOptions opt;

  auto *debug_cmd = app.add_subcommand("debug", "Debug one program against visible tests");
  std::string code_path, tests_path, entry, out_path = "fixed.py";
  debug_cmd->add_option("--code", code_path, "Buggy program file")->required();
  debug_cmd->add_option("--tests", tests_path, "Visible tests, one assertion per line")
      ->required();
  debug_cmd->add_option("--entry", entry, "Entry-point function name")->required();
  debug_cmd->add_option("--out", out_path, "Where to write the fixed program")
      ->capture_default_str();
  add_common_options(*debug_cmd, opt);

  auto *bench_cmd = app.add_subcommand("bench", "Run a benchmark debugging campaign");
  std::string dataset_path, kind_name, seeds_path, out_dir = "campaign_out";
  int jobs = 1;
  bench_cmd->add_option("--dataset", dataset_path, "Dataset JSONL file")->required();
  bench_cmd->add_option("--kind", kind_name, "Dataset kind")
      ->check(CLI::IsMember({"humaneval", "mbpp", "humanevalfix"}))
      ->required();
  bench_cmd->add_option("--seeds", seeds_path,
                        "Seed programs JSONL ({task_id, code} per line)");
  bench_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  bench_cmd->add_option("--jobs", jobs, "Concurrent debugging sessions")
      ->capture_default_str();
  add_common_options(*bench_cmd, opt);

  auto *seed_cmd = app.add_subcommand(
      "seed", "Generate a seeds file by completing each task with the model");
  std::string s_dataset, s_kind, s_out = "seeds.jsonl";
  seed_cmd->add_option("--dataset", s_dataset, "Dataset JSONL file")->required();
  seed_cmd->add_option("--kind", s_kind, "Dataset kind")
      ->check(CLI::IsMember({"humaneval", "mbpp", "humanevalfix"}))
      ->required();
  seed_cmd->add_option("--out", s_out, "Seeds JSONL to write")->capture_default_str();
  add_common_options(*seed_cmd, opt);

  auto *record_cmd = app.add_subcommand(
      "record", "Run a campaign against the live endpoint, recording every prompt");
  std::string r_dataset, r_kind, r_seeds, r_out = "campaign_out";
  int r_jobs = 1;
  record_cmd->add_option("--dataset", r_dataset, "Dataset JSONL file")->required();
  record_cmd->add_option("--kind", r_kind, "Dataset kind")
      ->check(CLI::IsMember({"humaneval", "mbpp", "humanevalfix"}))
      ->required();
  record_cmd->add_option("--seeds", r_seeds,
                         "Seed programs JSONL ({task_id, code} per line)");
  record_cmd->add_option("--out", r_out, "Output directory")->capture_default_str();
  record_cmd->add_option("--jobs", r_jobs, "Concurrent debugging sessions")
      ->capture_default_str();
  add_common_options(*record_cmd, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (debug_cmd->parsed()) return run_debug(opt, code_path, tests_path, entry, out_path);
    if (bench_cmd->parsed())
      return run_bench(opt, dataset_path, kind_name, seeds_path, out_dir, jobs, false);
    if (seed_cmd->parsed()) return run_seed(opt, s_dataset, s_kind, s_out);
    if (record_cmd->parsed()) {
      if (opt.record.empty())
        throw mgdbg::Error(mgdbg::ErrorKind::config_error,
                           "record mode needs --record CACHE");
      return run_bench(opt, r_dataset, r_kind, r_seeds, r_out, r_jobs, true);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
