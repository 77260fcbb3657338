#ifndef MGDBG_DEBUGGER_HPP
#define MGDBG_DEBUGGER_HPP

#include <map>
#include <string>
#include <vector>

#include "mgdbg/code_model.hpp"
#include "mgdbg/decomposer.hpp"
#include "mgdbg/executors.hpp"
#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/testgen.hpp"

namespace mgdbg {

enum class Strategy {
  hierarchical,
  holistic_simple_feedback,
  holistic_no_decomposition,
  no_simulated_execution,
  no_testgen,
  real_execution_trace,
};

const char *strategy_name(Strategy s);
Strategy strategy_from_name(const std::string &name);
bool strategy_uses_tree(Strategy s);

struct DebugConfig {
  int max_attempts = 10;
  Strategy strategy = Strategy::hierarchical;
  int per_unit_fix_retries = 3;
  bool strict_validation = false;
};

struct EvalRecord {
  std::string unit;
  ExecutionReport report;
  bool patch_applied = false;
  std::vector<std::string> test_texts;
};

struct AttemptRecord {
  int attempt_index = 0;  // 1-based
  std::vector<EvalRecord> traversal;
  bool visible_pass = false;
};

/// Full audit trail of one problem's repair.
struct DebugSession {
  std::string problem_id;
  std::string entry_point;
  Strategy strategy = Strategy::hierarchical;
  std::string seed_code;
  std::vector<AttemptRecord> attempts;
  std::vector<std::string> tree_snapshots;  // flattened code after each attempt
  std::string final_code;
  bool fixed = false;  // visible tests passed before the budget ran out
  std::vector<PromptRecord> llm_calls;
  std::vector<std::string> warnings;
};

struct PatchOutcome {
  bool fixed = false;
  bool patched = false;  // at least one replacement was applied
};

class Debugger {
 public:
  Debugger(Gateway &gateway, const RealExecutor &real, DebugConfig cfg);

  // Dispatches on cfg.strategy: tree strategies decompose first (with
  // fallback), holistic strategies treat the program as one unit.
  DebugSession run_session(const std::string &problem_id, const std::string &code,
                           const std::string &entry_point, const PublicTestSet &t_pub);

  // Bottom-up repair over an existing tree (one attempt = one full
  // post-order traversal; stops early once the visible tests pass).
  DebugSession debug_tree(const std::string &problem_id, DecompositionTree tree,
                          const PublicTestSet &t_pub);

  DebugSession debug_holistic(const std::string &problem_id, const std::string &code,
                              const std::string &entry_point, const PublicTestSet &t_pub);

  const DebugConfig &config() const { return cfg_; }

 private:
  ExecutionReport evaluate_unit(const DecompositionTree &tree, const std::string &unit,
                                const std::vector<SubTestCase> &tests,
                                std::vector<std::string> &warnings);
  PatchOutcome debug_unit(DecompositionTree &tree, const std::string &unit,
                          const std::vector<SubTestCase> &tests, ExecutionReport &report,
                          DebugSession &session);
  void run_tree_attempts(DecompositionTree tree, const PublicTestSet &t_pub,
                         DebugSession &session);
  void run_no_testgen_attempts(DecompositionTree tree, const PublicTestSet &t_pub,
                               DebugSession &session);
  std::string pick_implicated_unit(const DecompositionTree &tree,
                                   const ExecutionReport &root_report) const;

  Gateway *gateway_;
  const RealExecutor *real_;
  DebugConfig cfg_;
};

}  // namespace mgdbg

#endif  // MGDBG_DEBUGGER_HPP
