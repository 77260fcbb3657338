#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mgdbg/errors.hpp"
#include "mgdbg/harness.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

using nlohmann::json;

DatasetKind dataset_kind_from_name(const std::string &name) {
  if (name == "humaneval") return DatasetKind::humaneval;
  if (name == "mbpp") return DatasetKind::mbpp;
  if (name == "humanevalfix") return DatasetKind::humanevalfix;
  throw Error(ErrorKind::config_error, "unknown dataset kind \"" + name + "\"");
}

namespace {

std::string category_from_bug_type(const std::string &bug_type) {
  if (bug_type.find("value") != std::string::npos) return "value";
  if (bug_type.find("missing") != std::string::npos) return "missing_logic";
  if (bug_type.find("excess") != std::string::npos) return "excess_logic";
  if (bug_type.find("operator") != std::string::npos) return "operator";
  if (bug_type.find("variable") != std::string::npos) return "variable";
  if (bug_type.find("function") != std::string::npos) return "function";
  return bug_type;
}

std::string require_string(const json &record, const char *field, std::size_t index) {
  if (!record.contains(field) || !record[field].is_string())
    throw Error(ErrorKind::schema_error,
                "record " + std::to_string(index) + " missing field \"" + field + "\"");
  return record[field].get<std::string>();
}

// HumanEval's canonical_solution continues the prompt text.
std::string complete_solution(const std::string &prompt, const std::string &body) {
  return prompt + body;
}

std::string first_called_identifier(const std::string &assertion) {
  auto parsed = parse_assertion_line(assertion);
  if (!parsed) return "";
  const std::string &expr = parsed->call_expr;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    if (!is_identifier_start(expr[i])) continue;
    std::size_t b = i;
    while (i < expr.size() && is_identifier_char(expr[i])) ++i;
    std::size_t j = i;
    while (j < expr.size() && std::isspace(static_cast<unsigned char>(expr[j]))) ++j;
    if (j < expr.size() && expr[j] == '(') return expr.substr(b, i - b);
  }
  return "";
}

BenchmarkProblem humaneval_problem(const json &record, std::size_t index) {
  BenchmarkProblem p;
  p.task_id = require_string(record, "task_id", index);
  p.prompt = require_string(record, "prompt", index);
  p.entry_point = require_string(record, "entry_point", index);
  std::string test = require_string(record, "test", index);

  p.visible_tests.tests = extract_docstring_tests(p.prompt);
  p.visible_tests.source = PublicTestSet::Source::task_description;

  std::vector<std::string> hidden = extract_check_asserts(test, p.entry_point);
  if (hidden.empty()) {
    // Not plain asserts: run the whole test program as one block.
    hidden.push_back(test + "\n\ncheck(" + p.entry_point + ")");
  }
  p.hidden_tests.tests = std::move(hidden);

  if (record.contains("canonical_solution") && record["canonical_solution"].is_string())
    p.canonical_solution =
        complete_solution(p.prompt, record["canonical_solution"].get<std::string>());
  return p;
}

BenchmarkProblem mbpp_problem(const json &record, std::size_t index) {
  BenchmarkProblem p;
  if (record.contains("task_id"))
    p.task_id = record["task_id"].is_string()
                    ? record["task_id"].get<std::string>()
                    : std::to_string(record["task_id"].get<long>());
  else
    throw Error(ErrorKind::schema_error,
                "record " + std::to_string(index) + " missing field \"task_id\"");
  p.prompt = record.value("text", record.value("prompt", ""));
  if (!record.contains("test_list") || !record["test_list"].is_array() ||
      record["test_list"].empty())
    throw Error(ErrorKind::schema_error,
                "record " + std::to_string(index) + " missing field \"test_list\"");

  std::vector<std::string> tests;
  for (const json &t : record["test_list"]) tests.push_back(t.get<std::string>());

  // First test is visible, the rest are hidden.
  p.visible_tests.tests = {tests.front()};
  p.visible_tests.source = PublicTestSet::Source::first_mbpp_case;
  p.hidden_tests.tests.assign(tests.begin() + 1, tests.end());

  if (record.contains("entry_point") && record["entry_point"].is_string())
    p.entry_point = record["entry_point"].get<std::string>();
  else
    p.entry_point = first_called_identifier(tests.front());
  if (p.entry_point.empty())
    throw Error(ErrorKind::schema_error,
                "record " + std::to_string(index) + ": cannot derive entry_point");

  if (record.contains("code") && record["code"].is_string())
    p.canonical_solution = record["code"].get<std::string>();
  return p;
}

BenchmarkProblem humanevalfix_problem(const json &record, std::size_t index) {
  BenchmarkProblem p;
  p.task_id = require_string(record, "task_id", index);
  p.prompt = require_string(record, "prompt", index);
  p.entry_point = require_string(record, "entry_point", index);
  std::string test = require_string(record, "test", index);
  std::string buggy = require_string(record, "buggy_solution", index);

  p.provided_seed = complete_solution(p.prompt, buggy);
  if (record.contains("canonical_solution") && record["canonical_solution"].is_string())
    p.canonical_solution =
        complete_solution(p.prompt, record["canonical_solution"].get<std::string>());

  if (record.contains("example_test") && record["example_test"].is_string()) {
    std::string example = record["example_test"].get<std::string>();
    p.visible_tests.tests = extract_check_asserts(example, p.entry_point);
    if (p.visible_tests.tests.empty())
      p.visible_tests.tests.push_back(example + "\n\ncheck(" + p.entry_point + ")");
  } else {
    p.visible_tests.tests = extract_docstring_tests(p.prompt);
  }
  p.visible_tests.source = PublicTestSet::Source::task_description;

  std::vector<std::string> hidden = extract_check_asserts(test, p.entry_point);
  if (hidden.empty()) hidden.push_back(test + "\n\ncheck(" + p.entry_point + ")");
  p.hidden_tests.tests = std::move(hidden);

  if (record.contains("bug_type") && record["bug_type"].is_string())
    p.category = category_from_bug_type(record["bug_type"].get<std::string>());
  return p;
}

}  // namespace

std::vector<std::string> extract_docstring_tests(const std::string &prompt) {
  std::vector<std::string> tests;
  std::vector<std::string> lines = split_lines(prompt);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = trim(lines[i]);
    if (t.substr(0, 4) != ">>> ") continue;
    std::string expr(trim(t.substr(4)));
    if (expr.empty()) continue;
    // The expected value is the next line, unless it is another example.
    if (i + 1 >= lines.size()) continue;
    std::string_view expected = trim(lines[i + 1]);
    if (expected.empty() || expected.substr(0, 3) == ">>>" ||
        expected.substr(0, 3) == "\"\"\"" || expected.substr(0, 3) == "'''")
      continue;
    tests.push_back("assert " + expr + " == " + std::string(expected));
  }
  return tests;
}

std::vector<std::string> extract_check_asserts(const std::string &test_code,
                                               const std::string &entry_point) {
  std::vector<std::string> lines = split_lines(test_code);
  std::vector<std::string> asserts;
  bool in_check = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string &line = lines[i];
    std::string_view t = trim(line);
    if (t.substr(0, 9) == "def check") {
      in_check = true;
      continue;
    }
    if (!in_check) continue;
    if (!line.empty() && !std::isspace(static_cast<unsigned char>(line[0]))) {
      in_check = false;  // left the check body
      continue;
    }
    if (t.empty() || t.front() == '#') continue;
    if (t.substr(0, 7) != "assert ") return {};  // loops/helpers: not plain asserts
    std::string stmt(t);
    // Multi-line assertion: join bracket continuations.
    auto balanced = [](std::string_view s) {
      long depth = 0;
      char quote = 0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        char c = s[k];
        if (quote) {
          if (c == '\\') ++k;
          else if (c == quote) quote = 0;
          continue;
        }
        if (c == '\'' || c == '"') quote = c;
        else if (c == '(' || c == '[' || c == '{') ++depth;
        else if (c == ')' || c == ']' || c == '}') --depth;
      }
      return depth == 0 && quote == 0;
    };
    while (!balanced(stmt) && i + 1 < lines.size()) {
      ++i;
      stmt += " ";
      stmt += trim(lines[i]);
    }
    // Word-boundary substitution of `candidate` with the entry point.
    std::string with_entry;
    std::size_t pos = 0;
    while (pos < stmt.size()) {
      if (stmt.compare(pos, 9, "candidate") == 0 &&
          (pos == 0 || !is_identifier_char(stmt[pos - 1])) &&
          (pos + 9 >= stmt.size() || !is_identifier_char(stmt[pos + 9]))) {
        with_entry += entry_point;
        pos += 9;
      } else {
        with_entry += stmt[pos];
        ++pos;
      }
    }
    asserts.push_back(std::move(with_entry));
  }
  return asserts;
}

std::vector<BenchmarkProblem> load_benchmark(const std::string &path, DatasetKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_error, "cannot open dataset " + path);

  std::vector<BenchmarkProblem> problems;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (is_blank(line)) {
      ++index;
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::schema_error,
                  "record " + std::to_string(index) + ": invalid JSON: " + e.what());
    }
    switch (kind) {
      case DatasetKind::humaneval:
        problems.push_back(humaneval_problem(record, index));
        break;
      case DatasetKind::mbpp:
        problems.push_back(mbpp_problem(record, index));
        break;
      case DatasetKind::humanevalfix:
        problems.push_back(humanevalfix_problem(record, index));
        break;
    }
    ++index;
  }
  return problems;
}

std::vector<SeedProgram> load_seeds(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_error, "cannot open seeds file " + path);
  std::vector<SeedProgram> seeds;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (is_blank(line)) {
      ++index;
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::schema_error,
                  "seed record " + std::to_string(index) + ": invalid JSON: " + e.what());
    }
    SeedProgram seed;
    if (record.contains("task_id"))
      seed.task_id = record["task_id"].is_string()
                         ? record["task_id"].get<std::string>()
                         : std::to_string(record["task_id"].get<long>());
    seed.code = record.value("code", "");
    if (seed.task_id.empty() || seed.code.empty())
      throw Error(ErrorKind::schema_error,
                  "seed record " + std::to_string(index) + " needs task_id and code");
    seeds.push_back(std::move(seed));
    ++index;
  }
  return seeds;
}

}  // namespace mgdbg
