#include "mgdbg/debugger.hpp"

#include <algorithm>
#include <sstream>

#include "mgdbg/errors.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

const char *strategy_name(Strategy s) {
  switch (s) {
    case Strategy::hierarchical: return "hierarchical";
    case Strategy::holistic_simple_feedback: return "holistic_simple_feedback";
    case Strategy::holistic_no_decomposition: return "holistic_no_decomposition";
    case Strategy::no_simulated_execution: return "no_simulated_execution";
    case Strategy::no_testgen: return "no_testgen";
    case Strategy::real_execution_trace: return "real_execution_trace";
  }
  return "hierarchical";
}

Strategy strategy_from_name(const std::string &name) {
  for (Strategy s : {Strategy::hierarchical, Strategy::holistic_simple_feedback,
                     Strategy::holistic_no_decomposition, Strategy::no_simulated_execution,
                     Strategy::no_testgen, Strategy::real_execution_trace})
    if (name == strategy_name(s)) return s;
  throw Error(ErrorKind::config_error, "unknown strategy \"" + name + "\"");
}

bool strategy_uses_tree(Strategy s) {
  return s == Strategy::hierarchical || s == Strategy::no_simulated_execution ||
         s == Strategy::no_testgen || s == Strategy::real_execution_trace;
}

namespace {

ExecutionReport all_fail_report(const std::string &unit, std::size_t test_count,
                                const std::string &detail) {
  ExecutionReport report;
  report.unit = unit;
  report.mode = ExecutionReport::Mode::simulated;
  for (std::size_t i = 0; i < test_count; ++i)
    report.results.push_back({static_cast<int>(i), Verdict::fail, detail});
  return report;
}

std::vector<std::string> rendered(const std::vector<SubTestCase> &tests) {
  std::vector<std::string> texts;
  texts.reserve(tests.size());
  for (const SubTestCase &t : tests) texts.push_back(t.render());
  return texts;
}

std::string failing_only(const ExecutionReport &report,
                         const std::vector<SubTestCase> &tests) {
  std::ostringstream out;
  bool first = true;
  for (const TestOutcome &r : report.results) {
    if (r.verdict == Verdict::pass) continue;
    if (!first) out << "\n";
    first = false;
    if (static_cast<std::size_t>(r.test_index) < tests.size())
      out << "Test case " << r.test_index << ": "
          << tests[static_cast<std::size_t>(r.test_index)].render() << "\n";
    std::string v = verdict_name(r.verdict);
    for (char &c : v) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out << "Result: " << v;
    if (!r.detail.empty()) out << " - " << r.detail;
  }
  return out.str();
}

// Picks the definition named `unit` out of a reply code block that may also
// carry helpers or surrounding code. Throws SignatureRename when the block
// only defines other functions.
std::string select_unit_def(const std::string &block, const std::string &unit) {
  CodeArtifact artifact;
  try {
    artifact = parse_artifact(block, unit);
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::missing_entry_point)
      throw Error(ErrorKind::signature_rename,
                  "patch does not define \"" + unit + "\"");
    throw;
  }
  return artifact.find(unit)->source;
}

}  // namespace

Debugger::Debugger(Gateway &gateway, const RealExecutor &real, DebugConfig cfg)
    : gateway_(&gateway), real_(&real), cfg_(cfg) {}

ExecutionReport Debugger::evaluate_unit(const DecompositionTree &tree,
                                        const std::string &unit,
                                        const std::vector<SubTestCase> &tests,
                                        std::vector<std::string> &warnings) {
  switch (cfg_.strategy) {
    case Strategy::no_simulated_execution:
      return real_->run_tests(flatten(tree), tests, unit);
    case Strategy::real_execution_trace: {
      ExecutionReport report;
      report.unit = unit;
      report.mode = ExecutionReport::Mode::real;
      std::string flat = flatten(tree);
      for (std::size_t i = 0; i < tests.size(); ++i) {
        RealExecutor::TracedOutcome traced = real_->run_traced(flat, tests[i].render());
        TestOutcome outcome;
        outcome.test_index = static_cast<int>(i);
        outcome.verdict = traced.verdict;
        outcome.detail = traced.detail;
        if (!traced.trace.empty()) {
          if (!outcome.detail.empty()) outcome.detail += "\n";
          outcome.detail += "Execution trace:\n" + traced.trace;
        }
        report.results.push_back(std::move(outcome));
      }
      return report;
    }
    default: {
      SimulatedExecutor simulated(*gateway_);
      try {
        return simulated.simulate(unit, tree.unit(unit).source,
                                  tree.descendant_source(unit), tests);
      } catch (const Error &e) {
        warnings.push_back("simulated execution of " + unit +
                           " unparseable; treating tests as failed: " + e.what());
        return all_fail_report(unit, tests.size(), "simulated execution unparseable");
      }
    }
  }
}

PatchOutcome Debugger::debug_unit(DecompositionTree &tree, const std::string &unit,
                                  const std::vector<SubTestCase> &tests,
                                  ExecutionReport &report, DebugSession &session) {
  PatchOutcome outcome;
  for (int attempt = 0; attempt < cfg_.per_unit_fix_retries; ++attempt) {
    RenderedPrompt prompt;
    try {
      prompt = render_prompt(TemplateId::debug,
                             {{"function_code", tree.unit(unit).source},
                              {"test_case_results", format_report_for_repair(report, tests)}});
    } catch (const Error &e) {
      session.warnings.push_back(e.what());
      return outcome;
    }

    std::string reply;
    try {
      reply = gateway_->complete(TemplateId::debug, PromptPurpose::repair, prompt);
    } catch (const Error &e) {
      session.warnings.push_back("repair prompt for " + unit + " failed: " + e.what());
      return outcome;  // never aborts the session
    }

    try {
      std::string block = extract_code_block(reply);
      std::string new_source = select_unit_def(block, unit);
      tree = replace_unit(tree, unit, new_source);
    } catch (const Error &e) {
      session.warnings.push_back("patch for " + unit + " rejected: " + e.what());
      continue;  // retry consumed
    }
    outcome.patched = true;

    report = evaluate_unit(tree, unit, tests, session.warnings);
    if (report.all_passed()) {
      outcome.fixed = true;
      return outcome;
    }
  }
  return outcome;
}

std::string Debugger::pick_implicated_unit(const DecompositionTree &tree,
                                           const ExecutionReport &root_report) const {
  // Root-level failures implicate the non-root unit their details mention
  // most; defaults to the root itself.
  std::string all_detail = root_report.narrative;
  for (const TestOutcome &r : root_report.results)
    if (r.verdict != Verdict::pass) all_detail += "\n" + r.detail;

  std::string best = tree.root;
  std::size_t best_count = 0;
  for (const std::string &name : tree.post_order()) {
    if (name == tree.root) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = all_detail.find(name, pos)) != std::string::npos) {
      ++count;
      pos += name.size();
    }
    if (count > best_count) {
      best_count = count;
      best = name;
    }
  }
  return best;
}

void Debugger::run_tree_attempts(DecompositionTree tree, const PublicTestSet &t_pub,
                                 DebugSession &session) {
  if (cfg_.strategy == Strategy::no_testgen) {
    run_no_testgen_attempts(std::move(tree), t_pub, session);
    return;
  }
  // Derived tests are cached per unit and regenerated only when the unit's
  // own source changed since generation.
  std::map<std::string, std::pair<std::string, std::vector<SubTestCase>>> test_cache;
  // Units whose whole subtree already passed are skipped while unchanged.
  std::map<std::string, std::string> pass_memo;
  // Units whose derived-test failures were downgraded because their parents
  // pass with the unit unchanged.
  std::map<std::string, std::string> parent_vouched;

  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    AttemptRecord record;
    record.attempt_index = attempt;

    std::map<std::string, bool> unit_passed;   // evaluation outcome this attempt
    std::map<std::string, bool> unit_unfixed;  // failed and stayed unchanged

    std::vector<std::string> order = tree.post_order();
    for (const std::string &unit : order) {
      bool is_root = unit == tree.root;

      std::vector<SubTestCase> tests;
      if (is_root) {
        tests = root_subtests(tree.root, t_pub);
      } else {
        const std::string &source = tree.unit(unit).source;
        auto it = test_cache.find(unit);
        if (it != test_cache.end() && it->second.first == source) {
          tests = it->second.second;
        } else {
          try {
            tests = generate_subtests(tree, unit, t_pub, *gateway_);
          } catch (const Error &e) {
            session.warnings.push_back("test generation for " + unit + " failed: " +
                                       e.what());
          }
          test_cache[unit] = {source, tests};
        }
        // Degradation path: no derived tests, the unit is only exercised
        // through its parents.
        if (tests.empty()) continue;
      }

      std::string subtree_key = tree.subtree_source(unit);
      if (auto it = pass_memo.find(unit);
          it != pass_memo.end() && it->second == subtree_key) {
        EvalRecord cached;
        cached.unit = unit;
        cached.report.unit = unit;
        cached.report.cached = true;
        cached.report.mode = ExecutionReport::Mode::simulated;
        for (std::size_t i = 0; i < tests.size(); ++i)
          cached.report.results.push_back({static_cast<int>(i), Verdict::pass, ""});
        cached.test_texts = rendered(tests);
        record.traversal.push_back(std::move(cached));
        unit_passed[unit] = true;
        continue;
      }
      if (auto it = parent_vouched.find(unit);
          it != parent_vouched.end() && it->second == subtree_key) {
        unit_passed[unit] = true;
        continue;
      }

      ExecutionReport report = evaluate_unit(tree, unit, tests, session.warnings);
      EvalRecord eval;
      eval.unit = unit;
      eval.test_texts = rendered(tests);
      if (report.all_passed()) {
        pass_memo[unit] = subtree_key;
        unit_passed[unit] = true;
        eval.report = std::move(report);  // correct function; keep as is
        record.traversal.push_back(std::move(eval));
        continue;
      }

      eval.report = report;
      std::string source_before = tree.unit(unit).source;
      PatchOutcome patch = debug_unit(tree, unit, tests, report, session);
      eval.patch_applied = patch.patched;
      record.traversal.push_back(std::move(eval));
      if (patch.fixed) {
        pass_memo[unit] = tree.subtree_source(unit);
        unit_passed[unit] = true;
      } else {
        unit_passed[unit] = false;
        if (tree.unit(unit).source == source_before) unit_unfixed[unit] = true;
      }
    }

    // Parent-level evidence dominates imperfect derived tests: a unit that
    // stayed unchanged through its repair budget while every evaluated
    // parent passes is not re-debugged while it stays unchanged.
    for (const auto &[unit, stuck] : unit_unfixed) {
      if (!stuck || unit == tree.root) continue;
      bool vouched = false;
      bool any_parent = false;
      for (const auto &[parent, kids] : tree.children) {
        if (std::find(kids.begin(), kids.end(), unit) == kids.end()) continue;
        auto it = unit_passed.find(parent);
        if (it == unit_passed.end()) continue;
        any_parent = true;
        vouched = it->second;
        if (!vouched) break;
      }
      if (any_parent && vouched) {
        parent_vouched[unit] = tree.subtree_source(unit);
        session.warnings.push_back("derived-test failures for " + unit +
                                   " downgraded to warnings (parents pass unchanged)");
      }
    }

    ExecutionReport visible =
        real_->run_assertions(flatten(tree), t_pub.tests, tree.root);
    record.visible_pass = visible.all_passed();
    session.attempts.push_back(std::move(record));
    session.tree_snapshots.push_back(flatten(tree));

    if (session.attempts.back().visible_pass) {
      session.fixed = true;
      break;
    }
    // The real check contradicts a remembered simulated pass of the root;
    // drop that memo so the next attempt re-evaluates it.
    pass_memo.erase(tree.root);
  }
  session.final_code = flatten(tree);
}

void Debugger::run_no_testgen_attempts(DecompositionTree tree, const PublicTestSet &t_pub,
                                       DebugSession &session) {
  std::vector<SubTestCase> tests = root_subtests(tree.root, t_pub);

  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    AttemptRecord record;
    record.attempt_index = attempt;

    ExecutionReport report = evaluate_unit(tree, tree.root, tests, session.warnings);
    EvalRecord eval;
    eval.unit = tree.root;
    eval.report = report;
    eval.test_texts = rendered(tests);

    if (!report.all_passed()) {
      std::string target = pick_implicated_unit(tree, report);
      for (int retry = 0; retry < cfg_.per_unit_fix_retries; ++retry) {
        RenderedPrompt prompt = render_prompt(
            TemplateId::debug,
            {{"function_code", tree.unit(target).source},
             {"test_case_results", format_report_for_repair(report, tests)}});
        std::string reply;
        try {
          reply = gateway_->complete(TemplateId::debug, PromptPurpose::repair, prompt);
        } catch (const Error &e) {
          session.warnings.push_back("repair prompt for " + target + " failed: " + e.what());
          break;
        }
        try {
          std::string block = extract_code_block(reply);
          tree = replace_unit(tree, target, select_unit_def(block, target));
        } catch (const Error &e) {
          session.warnings.push_back("patch for " + target + " rejected: " + e.what());
          continue;
        }
        eval.patch_applied = true;
        report = evaluate_unit(tree, tree.root, tests, session.warnings);
        if (report.all_passed()) break;
      }
    }

    record.traversal.push_back(std::move(eval));
    ExecutionReport visible =
        real_->run_assertions(flatten(tree), t_pub.tests, tree.root);
    record.visible_pass = visible.all_passed();
    session.attempts.push_back(std::move(record));
    session.tree_snapshots.push_back(flatten(tree));

    if (session.attempts.back().visible_pass) {
      session.fixed = true;
      break;
    }
  }
  session.final_code = flatten(tree);
}

DebugSession Debugger::debug_tree(const std::string &problem_id, DecompositionTree tree,
                                  const PublicTestSet &t_pub) {
  DebugSession session;
  session.problem_id = problem_id;
  session.entry_point = tree.root;
  session.strategy = cfg_.strategy;
  session.seed_code = flatten(tree);
  gateway_->set_log(&session.llm_calls);
  run_tree_attempts(std::move(tree), t_pub, session);
  gateway_->set_log(nullptr);
  return session;
}

DebugSession Debugger::debug_holistic(const std::string &problem_id,
                                      const std::string &code,
                                      const std::string &entry_point,
                                      const PublicTestSet &t_pub) {
  DebugSession session;
  session.problem_id = problem_id;
  session.entry_point = entry_point;
  session.strategy = cfg_.strategy;
  session.seed_code = code;
  gateway_->set_log(&session.llm_calls);

  const bool simple = cfg_.strategy == Strategy::holistic_simple_feedback;
  std::vector<SubTestCase> tests = root_subtests(entry_point, t_pub);
  std::string current = code;

  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    AttemptRecord record;
    record.attempt_index = attempt;

    ExecutionReport report;
    if (simple) {
      report = real_->run_assertions(current, t_pub.tests, entry_point);
    } else {
      SimulatedExecutor simulated(*gateway_);
      try {
        report = simulated.simulate(entry_point, current, "", tests);
      } catch (const Error &e) {
        session.warnings.push_back(std::string("simulated execution unparseable: ") + e.what());
        report = all_fail_report(entry_point, tests.size(), "simulated execution unparseable");
      }
    }

    EvalRecord eval;
    eval.unit = entry_point;
    eval.report = report;
    eval.test_texts = t_pub.tests;

    if (!report.all_passed()) {
      for (int retry = 0; retry < cfg_.per_unit_fix_retries; ++retry) {
        RenderedPrompt prompt =
            simple ? render_prompt(TemplateId::simple_feedback,
                                   {{"code", current},
                                    {"test_case_results", failing_only(report, tests)}})
                   : render_prompt(TemplateId::debug,
                                   {{"function_code", current},
                                    {"test_case_results",
                                     format_report_for_repair(report, tests)}});
        std::string reply;
        try {
          reply = gateway_->complete(
              simple ? TemplateId::simple_feedback : TemplateId::debug,
              simple ? PromptPurpose::simple_feedback : PromptPurpose::repair, prompt);
        } catch (const Error &e) {
          session.warnings.push_back(std::string("repair prompt failed: ") + e.what());
          break;
        }

        std::string candidate;
        try {
          candidate = extract_code_block(reply);
          parse_artifact(candidate, entry_point);  // must still define the entry point
          if (auto err = real_->syntax_error(candidate))
            throw Error(ErrorKind::parse_error, *err);
        } catch (const Error &e) {
          session.warnings.push_back(std::string("holistic patch rejected: ") + e.what());
          continue;
        }
        current = candidate;
        eval.patch_applied = true;

        if (simple) {
          report = real_->run_assertions(current, t_pub.tests, entry_point);
        } else {
          SimulatedExecutor simulated(*gateway_);
          try {
            report = simulated.simulate(entry_point, current, "", tests);
          } catch (const Error &e) {
            session.warnings.push_back(std::string("simulated execution unparseable: ") + e.what());
            report =
                all_fail_report(entry_point, tests.size(), "simulated execution unparseable");
          }
        }
        if (report.all_passed()) break;
      }
    }

    // Simple mode evaluates for real throughout, and `report` always refers
    // to the current code; simulated mode needs a fresh real check.
    ExecutionReport visible =
        simple ? report : real_->run_assertions(current, t_pub.tests, entry_point);
    record.traversal.push_back(std::move(eval));
    record.visible_pass = visible.all_passed();
    session.attempts.push_back(std::move(record));
    session.tree_snapshots.push_back(current);

    if (session.attempts.back().visible_pass) {
      session.fixed = true;
      break;
    }
  }
  session.final_code = current;
  gateway_->set_log(nullptr);
  return session;
}

DebugSession Debugger::run_session(const std::string &problem_id, const std::string &code,
                                   const std::string &entry_point,
                                   const PublicTestSet &t_pub) {
  if (!strategy_uses_tree(cfg_.strategy))
    return debug_holistic(problem_id, code, entry_point, t_pub);

  DebugSession session;
  session.problem_id = problem_id;
  session.entry_point = entry_point;
  session.strategy = cfg_.strategy;
  session.seed_code = code;
  gateway_->set_log(&session.llm_calls);

  DecompositionTree tree = decompose_with_fallback(
      code, entry_point, *gateway_, real_, t_pub, cfg_.strict_validation, session.warnings);

  run_tree_attempts(std::move(tree), t_pub, session);
  gateway_->set_log(nullptr);
  return session;
}

}  // namespace mgdbg
