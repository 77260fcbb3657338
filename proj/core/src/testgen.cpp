#include "mgdbg/testgen.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mgdbg/errors.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

namespace {

// Positions of top-level "==" and "," in s (outside brackets and strings).
struct TopLevelScan {
  std::vector<std::size_t> eq;
  std::vector<std::size_t> comma;
};

TopLevelScan scan_top_level(std::string_view s) {
  TopLevelScan scan;
  long depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    switch (c) {
      case '\'': case '"': quote = c; break;
      case '(': case '[': case '{': ++depth; break;
      case ')': case ']': case '}': --depth; break;
      case ',':
        if (depth == 0) scan.comma.push_back(i);
        break;
      case '=':
        if (depth == 0 && i + 1 < s.size() && s[i + 1] == '=') {
          bool prev_op = i > 0 && (s[i - 1] == '!' || s[i - 1] == '<' || s[i - 1] == '>' ||
                                   s[i - 1] == '=');
          bool next_eq = i + 2 < s.size() && s[i + 2] == '=';
          if (!prev_op && !next_eq) scan.eq.push_back(i);
          ++i;
        }
        break;
      default: break;
    }
  }
  return scan;
}

bool brackets_balanced(std::string_view s) {
  long depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') --depth;
  }
  return depth == 0 && quote == 0;
}

}  // namespace

std::string SubTestCase::render() const {
  if (raw_text) return *raw_text;
  std::string out = "assert " + call_expr;
  if (expected_expr) out += " == " + *expected_expr;
  return out;
}

std::optional<SubTestCase> parse_assertion_line(const std::string &line) {
  std::string_view t = trim(line);
  if (t.substr(0, 7) != "assert ") return std::nullopt;
  std::string_view payload = trim(t.substr(7));
  if (payload.empty()) return std::nullopt;

  TopLevelScan scan = scan_top_level(payload);
  // A trailing top-level comma introduces an assertion message; drop it.
  if (!scan.comma.empty()) {
    std::size_t cut = scan.comma.back();
    bool after_eq = scan.eq.empty() || cut > scan.eq.front();
    if (after_eq) {
      payload = trim(payload.substr(0, cut));
      scan = scan_top_level(payload);
    }
  }

  SubTestCase test;
  if (scan.eq.empty()) {
    test.call_expr = std::string(payload);
  } else {
    std::size_t split = scan.eq.front();
    test.call_expr = std::string(trim(payload.substr(0, split)));
    test.expected_expr = std::string(trim(payload.substr(split + 2)));
  }
  if (test.call_expr.empty()) return std::nullopt;
  return test;
}

std::vector<SubTestCase> parse_assertions(const std::string &reply) {
  std::string body;
  try {
    body = extract_code_block(reply);
  } catch (const Error &) {
    body = reply;  // tolerate replies that skip the fence
  }

  std::vector<SubTestCase> tests;
  std::vector<std::string> lines = split_lines(body);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = trim(lines[i]);
    if (t.substr(0, 7) != "assert ") continue;
    // Join bracket continuations so multi-line assertions parse whole.
    std::string stmt(t);
    while (!brackets_balanced(stmt) && i + 1 < lines.size()) {
      ++i;
      stmt += " ";
      stmt += trim(lines[i]);
    }
    if (auto parsed = parse_assertion_line(stmt)) tests.push_back(std::move(*parsed));
  }
  if (tests.empty())
    throw Error(ErrorKind::no_assertions_found, "no assert statements in reply");
  return tests;
}

std::vector<SubTestCase> root_subtests(const std::string &root, const PublicTestSet &t_pub) {
  std::vector<SubTestCase> tests;
  tests.reserve(t_pub.tests.size());
  for (std::size_t i = 0; i < t_pub.tests.size(); ++i) {
    SubTestCase test;
    if (auto parsed = parse_assertion_line(t_pub.tests[i])) test = std::move(*parsed);
    test.target_unit = root;
    test.origin_public_test = static_cast<int>(i);
    test.raw_text = t_pub.tests[i];
    tests.push_back(std::move(test));
  }
  return tests;
}

std::vector<SubTestCase> generate_subtests(const DecompositionTree &tree,
                                           const std::string &unit,
                                           const PublicTestSet &t_pub, Gateway &gateway) {
  if (!tree.contains(unit))
    throw Error(ErrorKind::unknown_unit, "\"" + unit + "\" not in tree");
  if (t_pub.empty())
    throw Error(ErrorKind::testgen_failed, "no public tests to derive from");
  if (unit == tree.root) return root_subtests(unit, t_pub);

  std::ostringstream pub;
  for (std::size_t i = 0; i < t_pub.tests.size(); ++i) {
    if (i) pub << "\n";
    pub << t_pub.tests[i];
  }
  RenderedPrompt prompt = render_prompt(TemplateId::testgen,
                                        {{"full_code", flatten(tree)},
                                         {"public_test_cases", pub.str()},
                                         {"function_name", unit}});

  auto parse = [&unit, &t_pub](const std::string &reply) {
    std::vector<SubTestCase> parsed = parse_assertions(reply);
    // The analysis preceding the final code block is the justification.
    std::string rationale;
    std::size_t fence = reply.rfind("```", reply.rfind("```") - 1);
    if (fence != std::string::npos && fence > 0)
      rationale = std::string(trim(reply.substr(0, fence)));

    std::vector<SubTestCase> kept;
    for (SubTestCase &t : parsed) {
      // A derived test must actually exercise the target unit.
      if (!contains_word(t.call_expr, unit)) continue;
      t.target_unit = unit;
      t.rationale = rationale;
      kept.push_back(std::move(t));
    }
    if (kept.empty())
      throw Error(ErrorKind::testgen_failed,
                  "no derived assertions reference \"" + unit + "\"");
    for (std::size_t i = 0; i < kept.size(); ++i)
      kept[i].origin_public_test =
          static_cast<int>(std::min(i, t_pub.tests.size() - 1));
    return kept;
  };

  try {
    return complete_with_retries<std::vector<SubTestCase>>(
        gateway, TemplateId::testgen, PromptPurpose::testgen, prompt, parse);
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::testgen_failed) throw;
    throw Error(ErrorKind::testgen_failed, e.what());
  }
}

}  // namespace mgdbg
