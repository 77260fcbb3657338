#ifndef MGDBG_DECOMPOSER_HPP
#define MGDBG_DECOMPOSER_HPP

#include <string>
#include <vector>

#include "mgdbg/code_model.hpp"
#include "mgdbg/executors.hpp"
#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/testgen.hpp"

namespace mgdbg {

struct ValidationVerdict {
  bool fatal = false;       // flattened tree does not byte-compile
  bool equivalent = true;   // per-test outcome classes all match
  struct TestComparison {
    int test_index = 0;
    Verdict original = Verdict::error;
    Verdict decomposed = Verdict::error;
  };
  std::vector<TestComparison> comparisons;
  std::vector<std::string> warnings;
};

// Asks the LLM to rewrite `code` as flattened subfunctions and parses the
// result into a tree whose root keeps the original entry point name and
// parameter list. Throws DecompositionFailed after format retries.
DecompositionTree decompose(const std::string &code, const std::string &entry_point,
                            Gateway &gateway);

// Runs the visible tests against both the original program and the
// flattened tree and compares outcome classes test by test.
ValidationVerdict validate_decomposition(const DecompositionTree &tree,
                                         const std::string &original,
                                         const PublicTestSet &visible_tests,
                                         const RealExecutor &executor);

// decompose + validate; degrades to the tree of the original program when
// decomposition fails, flattens to broken code, or (in strict mode) is not
// behaviorally equivalent on the visible tests. Never throws for LLM-side
// failures; collects what happened into `warnings`.
DecompositionTree decompose_with_fallback(const std::string &code,
                                          const std::string &entry_point, Gateway &gateway,
                                          const RealExecutor *executor,
                                          const PublicTestSet &visible_tests, bool strict,
                                          std::vector<std::string> &warnings);

}  // namespace mgdbg

#endif  // MGDBG_DECOMPOSER_HPP
