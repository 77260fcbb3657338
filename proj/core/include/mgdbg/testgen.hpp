#ifndef MGDBG_TESTGEN_HPP
#define MGDBG_TESTGEN_HPP

#include <optional>
#include <string>
#include <vector>

#include "mgdbg/code_model.hpp"
#include "mgdbg/llm_gateway.hpp"

namespace mgdbg {

/// One derived test for a subfunction. Renders to a single assert statement;
/// an absent expected_expr means a truthiness assertion.
struct SubTestCase {
  std::string target_unit;
  std::string call_expr;
  std::optional<std::string> expected_expr;
  int origin_public_test = -1;
  std::string rationale;
  // Verbatim rendering override; set for root tests so they stay textually
  // identical to the public tests.
  std::optional<std::string> raw_text;

  std::string render() const;
};

struct PublicTestSet {
  enum class Source { task_description, first_mbpp_case };
  std::vector<std::string> tests;  // assertion texts
  Source source = Source::task_description;

  bool empty() const { return tests.empty(); }
  std::size_t size() const { return tests.size(); }
};

// Splits assertion lines from the reply's final code block (or, failing
// that, from the reply body) into (call_expr, expected_expr) pairs. The
// split happens at the top-level `==`, bracket- and string-aware; lines
// without one become truthiness assertions. Throws NoAssertionsFound.
std::vector<SubTestCase> parse_assertions(const std::string &reply);

// Splits a single `assert ...` statement; returns nullopt when the line is
// not an assertion.
std::optional<SubTestCase> parse_assertion_line(const std::string &line);

// Public tests re-targeted at the root unit, mapped 1:1 and kept verbatim.
std::vector<SubTestCase> root_subtests(const std::string &root, const PublicTestSet &t_pub);

// Derives tests for `unit` from the public tests of the main function.
// Root gets the public tests verbatim, other units go through the LLM.
// Throws TestGenFailed once retries are exhausted.
std::vector<SubTestCase> generate_subtests(const DecompositionTree &tree,
                                           const std::string &unit,
                                           const PublicTestSet &t_pub, Gateway &gateway);

}  // namespace mgdbg

#endif  // MGDBG_TESTGEN_HPP
