#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "mgdbg/errors.hpp"
#include "mgdbg/harness.hpp"
#include "mgdbg/session_json.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

namespace fs = std::filesystem;
using nlohmann::json;

std::shared_ptr<ChatBackend> make_backend(const BackendSpec &spec) {
  if (spec.custom) return spec.custom;
  switch (spec.kind) {
    case BackendSpec::Kind::live:
      return std::make_shared<HttpBackend>();
    case BackendSpec::Kind::replay:
      if (spec.cache_path.empty())
        throw Error(ErrorKind::config_error, "replay backend needs a cache path");
      return std::make_shared<ReplayBackend>(spec.cache_path);
    case BackendSpec::Kind::stub:
      return std::make_shared<ScriptedBackend>(spec.script);
  }
  throw Error(ErrorKind::config_error, "unknown backend kind");
}

namespace {

std::string sanitize_id(const std::string &task_id) {
  std::string out;
  for (char c : task_id)
    out += (is_identifier_char(c) || c == '-' || c == '.') ? c : '_';
  return out;
}

struct SessionJob {
  const BenchmarkProblem *problem = nullptr;
  std::string seed_code;
};

}  // namespace

CampaignReport run_campaign(const std::vector<BenchmarkProblem> &problems,
                            const std::vector<SeedProgram> &seeds,
                            const CampaignConfig &cfg) {
  CampaignReport report;
  RealExecutor real(cfg.sandbox);

  std::map<std::string, std::string> seed_code;
  for (const SeedProgram &s : seeds) seed_code[s.task_id] = s.code;

  std::shared_ptr<ChatBackend> backend = make_backend(cfg.backend);
  std::shared_ptr<RecordSink> recorder;
  if (!cfg.backend.record_path.empty())
    recorder = std::make_shared<RecordSink>(cfg.backend.record_path);

  std::string run_id = cfg.run_id.empty() ? strategy_name(cfg.debug.strategy) : cfg.run_id;

  // Buckets come from the seed token counts over all seeded problems.
  std::vector<SeedProgram> effective_seeds;
  for (const BenchmarkProblem &p : problems) {
    auto it = seed_code.find(p.task_id);
    std::string code = it != seed_code.end() ? it->second : p.provided_seed;
    if (!code.empty()) effective_seeds.push_back({p.task_id, code, false});
  }
  std::map<std::string, std::string> buckets = bucket_by_length(effective_seeds);

  std::map<std::string, std::string> seed_by_task;
  for (const SeedProgram &s : effective_seeds) seed_by_task[s.task_id] = s.code;

  std::mutex mutex;
  std::map<std::string, ProblemOutcome> outcomes;
  std::vector<std::string> warnings;
  std::atomic<std::size_t> next_index{0};

  auto worker = [&]() {
    for (;;) {
      std::size_t index = next_index.fetch_add(1);
      if (index >= problems.size()) return;
      const BenchmarkProblem &problem = problems[index];

      ProblemOutcome outcome;
      outcome.task_id = problem.task_id;
      outcome.category = problem.category;
      auto bucket_it = buckets.find(problem.task_id);
      if (bucket_it != buckets.end()) outcome.bucket = bucket_it->second;

      try {
        if (cfg.stop_flag && cfg.stop_flag->load()) {
          outcome.quarantined = true;
          outcome.error = "interrupted";
        } else {
          auto seed_it = seed_by_task.find(problem.task_id);
          if (seed_it == seed_by_task.end())
            throw Error(ErrorKind::config_error, "no seed program");
          const std::string &seed = seed_it->second;

          outcome.seed_correct = real.score_hidden(seed, problem.hidden_tests);
          if (!outcome.seed_correct) {
            if (problem.visible_tests.empty())
              throw Error(ErrorKind::config_error, "no visible tests");

            Gateway gateway(cfg.llm, backend, recorder);
            Debugger debugger(gateway, real, cfg.debug);
            DebugSession session = debugger.run_session(problem.task_id, seed,
                                                        problem.entry_point,
                                                        problem.visible_tests);
            outcome.attempts_used = static_cast<int>(session.attempts.size());
            outcome.session_fixed = session.fixed;

            if (cfg.persist_sessions && !cfg.out_dir.empty()) {
              fs::path dir = fs::path(cfg.out_dir) / "sessions" / sanitize_id(problem.task_id);
              save_session(session, (dir / (run_id + ".json")).string());
            }

            outcome.hidden_fixed = real.score_hidden(session.final_code, problem.hidden_tests);
            if (outcome.hidden_fixed) {
              // Retrospective per-attempt scoring; never informs the debugger.
              std::map<std::string, bool> snapshot_cache;
              for (std::size_t k = 0; k < session.tree_snapshots.size(); ++k) {
                const std::string &snapshot = session.tree_snapshots[k];
                auto cached = snapshot_cache.find(snapshot);
                bool pass = cached != snapshot_cache.end()
                                ? cached->second
                                : real.score_hidden(snapshot, problem.hidden_tests);
                snapshot_cache[snapshot] = pass;
                if (pass) {
                  outcome.first_fixed_attempt = static_cast<int>(k) + 1;
                  break;
                }
              }
              if (outcome.first_fixed_attempt == 0)
                outcome.first_fixed_attempt = std::max(1, outcome.attempts_used);
            }
          }
        }
      } catch (const std::exception &e) {
        outcome.quarantined = true;
        outcome.hidden_fixed = false;
        outcome.error = e.what();
      }

      std::lock_guard<std::mutex> lock(mutex);
      if (outcome.quarantined)
        warnings.push_back(problem.task_id + " quarantined: " + outcome.error);
      outcomes[problem.task_id] = std::move(outcome);
    }
  };

  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread &t : pool) t.join();
  }

  for (auto &[task_id, outcome] : outcomes) report.outcomes.push_back(std::move(outcome));
  report.warnings = std::move(warnings);
  std::sort(report.warnings.begin(), report.warnings.end());
  report.metrics = compute_metrics(report.outcomes, cfg.debug.max_attempts);
  return report;
}

namespace {

std::string fixed4(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

}  // namespace

void write_campaign_outputs(const CampaignReport &report, const CampaignConfig &cfg) {
  if (cfg.out_dir.empty()) return;
  fs::create_directories(cfg.out_dir);
  const MetricsSummary &m = report.metrics;

  {
    std::ofstream out(fs::path(cfg.out_dir) / "metrics.csv");
    out << "metric,value\n";
    out << "total," << m.total << "\n";
    out << "seed_correct," << m.seed_correct << "\n";
    out << "buggy," << m.buggy << "\n";
    out << "fixed," << m.fixed << "\n";
    out << "accuracy," << fixed4(m.accuracy) << "\n";
    out << "rsr," << (m.rsr ? fixed4(*m.rsr) : "nan") << "\n";
    for (const auto &[name, stat] : m.per_bucket)
      out << "bucket_" << name << "_rsr,"
          << (stat.rsr ? fixed4(*stat.rsr) : "nan") << "\n";
    for (const auto &[name, stat] : m.per_category)
      out << "category_" << name << "_rsr,"
          << (stat.rsr ? fixed4(*stat.rsr) : "nan") << "\n";
  }

  {
    std::ofstream out(fs::path(cfg.out_dir) / "curves.csv");
    out << "attempt,cumulative_fixed,cumulative_rsr\n";
    for (std::size_t k = 0; k < m.per_attempt_cumulative_rsr.size(); ++k) {
      double rsr = m.per_attempt_cumulative_rsr[k];
      long count = std::lround(rsr * m.buggy);
      out << (k + 1) << "," << count << "," << fixed4(rsr) << "\n";
    }
  }

  {
    json j;
    j["metrics"]["total"] = m.total;
    j["metrics"]["seed_correct"] = m.seed_correct;
    j["metrics"]["buggy"] = m.buggy;
    j["metrics"]["fixed"] = m.fixed;
    j["metrics"]["accuracy"] = m.accuracy;
    if (m.rsr) j["metrics"]["rsr"] = *m.rsr;
    j["metrics"]["per_attempt_cumulative_rsr"] = m.per_attempt_cumulative_rsr;
    for (const auto &[name, stat] : m.per_bucket) {
      json s;
      s["buggy"] = stat.buggy;
      s["fixed"] = stat.fixed;
      if (stat.rsr) s["rsr"] = *stat.rsr;
      j["metrics"]["per_bucket"][name] = std::move(s);
    }
    for (const auto &[name, stat] : m.per_category) {
      json s;
      s["buggy"] = stat.buggy;
      s["fixed"] = stat.fixed;
      if (stat.rsr) s["rsr"] = *stat.rsr;
      j["metrics"]["per_category"][name] = std::move(s);
    }
    json problems = json::array();
    for (const ProblemOutcome &o : report.outcomes) {
      json p;
      p["task_id"] = o.task_id;
      p["seed_correct"] = o.seed_correct;
      p["hidden_fixed"] = o.hidden_fixed;
      p["first_fixed_attempt"] = o.first_fixed_attempt;
      p["attempts_used"] = o.attempts_used;
      p["session_fixed"] = o.session_fixed;
      if (!o.category.empty()) p["category"] = o.category;
      if (!o.bucket.empty()) p["bucket"] = o.bucket;
      if (o.quarantined) {
        p["quarantined"] = true;
        p["error"] = o.error;
      }
      problems.push_back(std::move(p));
    }
    j["problems"] = std::move(problems);
    j["warnings"] = report.warnings;
    std::ofstream out(fs::path(cfg.out_dir) / "campaign_report.json");
    out << j.dump(2) << "\n";
  }
}

}  // namespace mgdbg
