#include <doctest.h>

#include "mgdbg/code_model.hpp"
#include "mgdbg/errors.hpp"
#include "mgdbg/testgen.hpp"
#include "support/synthetic_model.hpp"

using namespace mgdbg;

TEST_CASE("parse a single equality assertion") {
  std::vector<SubTestCase> tests = parse_assertions("```\nassert f([1,2]) == [2]\n```");
  REQUIRE(tests.size() == 1);
  CHECK(tests[0].call_expr == "f([1,2])");
  CHECK(tests[0].expected_expr == std::string("[2]"));
  CHECK(tests[0].render() == "assert f([1,2]) == [2]");
}

TEST_CASE("split at the top-level equality only") {
  // Expected splits hand-worked over ten assertion strings; the splitter
  // must ignore == inside brackets and strings.
  struct Case {
    const char *line;
    const char *call;
    const char *expected;  // nullptr = truthiness
  };
  const Case cases[] = {
      {"assert g((1,2)) == (2,1)", "g((1,2))", "(2,1)"},
      {"assert h(3)", "h(3)", nullptr},
      {"assert f('a == b') == 3", "f('a == b')", "3"},
      {"assert f([x == 1 for x in y]) == [True]", "f([x == 1 for x in y])", "[True]"},
      {"assert f({'k': 1}) == {'k': 2}", "f({'k': 1})", "{'k': 2}"},
      {"assert f(1) == 2, 'message'", "f(1)", "2"},
      {"assert f(g(1), 2) == [1, (2, 3)]", "f(g(1), 2)", "[1, (2, 3)]"},
      {"assert abs(f(0.1) - 0.3) < 1e-6", "abs(f(0.1) - 0.3) < 1e-6", nullptr},
      {"assert f(\"x,y\") == ('x', 'y')", "f(\"x,y\")", "('x', 'y')"},
      {"assert not f([])", "not f([])", nullptr},
  };
  for (const Case &c : cases) {
    CAPTURE(c.line);
    auto parsed = parse_assertion_line(c.line);
    REQUIRE(parsed.has_value());
    CHECK(parsed->call_expr == c.call);
    if (c.expected)
      CHECK(parsed->expected_expr == std::string(c.expected));
    else
      CHECK(!parsed->expected_expr.has_value());
  }
}

TEST_CASE("truthiness assertion renders without an expected value") {
  auto parsed = parse_assertion_line("assert h(3)");
  REQUIRE(parsed.has_value());
  CHECK(parsed->render() == "assert h(3)");
}

TEST_CASE("round trip: parse after render") {
  for (const char *line :
       {"assert f(1) == 2", "assert g([1, 2], k=3) == {'a': [4]}", "assert h(3)"}) {
    auto first = parse_assertion_line(line);
    REQUIRE(first.has_value());
    auto second = parse_assertion_line(first->render());
    REQUIRE(second.has_value());
    CHECK(second->call_expr == first->call_expr);
    CHECK(second->expected_expr == first->expected_expr);
  }
}

TEST_CASE("multi-line assertions join before splitting") {
  std::string reply =
      "```\nassert f([1,\n          2]) == [1,\n          2]\n```";
  std::vector<SubTestCase> tests = parse_assertions(reply);
  REQUIRE(tests.size() == 1);
  CHECK(tests[0].call_expr == "f([1, 2])");
}

TEST_CASE("no assertions found") {
  CHECK_THROWS_AS(parse_assertions("```\nx = 1\n```"), Error);
  CHECK_THROWS_AS(parse_assertions("nothing here"), Error);
}

TEST_CASE("root unit gets the public tests verbatim") {
  std::string source = "def main(x):\n    return x\n";
  DecompositionTree tree = build_tree(parse_artifact(source, "main"));
  PublicTestSet t_pub;
  t_pub.tests = {"assert main(1) == 1", "assert main(2)==2"};

  LLMConfig cfg;
  cfg.model_id = "t";
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{});
  Gateway gw(cfg, backend);

  std::vector<SubTestCase> tests = generate_subtests(tree, "main", t_pub, gw);
  REQUIRE(tests.size() == 2);
  CHECK(tests[0].render() == "assert main(1) == 1");
  CHECK(tests[1].render() == "assert main(2)==2");  // textually identical
  CHECK(tests[0].origin_public_test == 0);
  CHECK(tests[1].origin_public_test == 1);
  CHECK(backend->calls() == 0);  // no generation for the root
}

TEST_CASE("derived tests for a collatz-style helper") {
  // Scripted reply shaped like the worked example: the helper receives the
  // sequence of the public test's input; expectation hand-computed from the
  // collatz trace 5 -> 16 -> 8 -> 4 -> 2 -> 1.
  std::string source =
      "def compute_sequence(n):\n"
      "    sequence = [n]\n"
      "    while n != 1:\n"
      "        n = n // 2 if n % 2 == 0 else 3 * n + 1\n"
      "        sequence.append(n)\n"
      "    return sequence\n"
      "\n"
      "def filter_odds(sequence):\n"
      "    return sorted(x for x in sequence if x % 2 == 1)\n"
      "\n"
      "def get_odd_collatz(n):\n"
      "    return filter_odds(compute_sequence(n))\n";
  DecompositionTree tree = build_tree(parse_artifact(source, "get_odd_collatz"));
  PublicTestSet t_pub;
  t_pub.tests = {"assert get_odd_collatz(5) == [1, 5]"};

  LLMConfig cfg;
  cfg.model_id = "t";
  std::string reply =
      "The main function feeds the whole sequence into filter_odds.\n\n"
      "```python\nassert filter_odds([5, 16, 8, 4, 2, 1]) == [1, 5]\n```";
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{reply});
  Gateway gw(cfg, backend);

  std::vector<SubTestCase> tests = generate_subtests(tree, "filter_odds", t_pub, gw);
  REQUIRE(tests.size() == 1);
  CHECK(tests[0].target_unit == "filter_odds");
  CHECK(tests[0].call_expr == "filter_odds([5, 16, 8, 4, 2, 1])");
  CHECK(tests[0].origin_public_test == 0);
}

TEST_CASE("testgen failure after retries") {
  std::string source =
      "def helper(x):\n    return x\n\ndef main(x):\n    return helper(x)\n";
  DecompositionTree tree = build_tree(parse_artifact(source, "main"));
  PublicTestSet t_pub;
  t_pub.tests = {"assert main(1) == 1"};

  LLMConfig cfg;
  cfg.model_id = "t";
  cfg.max_format_retries = 3;
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<std::string>{"prose", "more prose", "still prose"});
  Gateway gw(cfg, backend);
  try {
    generate_subtests(tree, "helper", t_pub, gw);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::testgen_failed);
  }
  CHECK(backend->calls() == 3);
}

TEST_CASE("derived assertions must reference the target unit") {
  std::string source =
      "def helper(x):\n    return x\n\ndef main(x):\n    return helper(x)\n";
  DecompositionTree tree = build_tree(parse_artifact(source, "main"));
  PublicTestSet t_pub;
  t_pub.tests = {"assert main(1) == 1"};

  LLMConfig cfg;
  cfg.model_id = "t";
  std::string off_target = "```\nassert main(1) == 1\n```";
  std::string on_target = "```\nassert helper(1) == 1\nassert other(2) == 2\n```";
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<std::string>{off_target, on_target});
  Gateway gw(cfg, backend);

  std::vector<SubTestCase> tests = generate_subtests(tree, "helper", t_pub, gw);
  REQUIRE(tests.size() == 1);  // the off-target assertion was dropped
  CHECK(tests[0].call_expr == "helper(1)");
  CHECK(backend->calls() == 2);  // first reply rejected, second accepted
}
