#include "support/synthetic_model.hpp"

#include <sstream>

#include "mgdbg/text_util.hpp"

namespace mgdbg::testing {

namespace {

std::string section_between(const std::string &text, const std::string &begin,
                            const std::string &end) {
  std::size_t b = text.find(begin);
  if (b == std::string::npos) return "";
  b += begin.size();
  std::size_t e = text.find(end, b);
  if (e == std::string::npos) e = text.size();
  return std::string(trim(text.substr(b, e - b)));
}

std::string last_line(const std::string &text) {
  std::vector<std::string> lines = split_lines(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto t = trim(*it);
    if (!t.empty()) return std::string(t);
  }
  return "";
}

}  // namespace

PromptKind classify_prompt(const std::string &user) {
  if (user.find("Convert the following Python code into a tree-style") != std::string::npos)
    return PromptKind::decompose;
  if (user.find("Public Test Cases for the Main Function:") != std::string::npos)
    return PromptKind::testgen;
  if (user.find("VERDICT <test index>") != std::string::npos) return PromptKind::simulate;
  if (user.find("CHECKPOINT <test index>") != std::string::npos)
    return PromptKind::trace_predict;
  if (user.find("The code below is incorrect") != std::string::npos)
    return PromptKind::simple_feedback;
  if (user.find("Function Code:") != std::string::npos) return PromptKind::repair;
  return PromptKind::unknown;
}

std::string prompt_code_section(const std::string &user) {
  std::string code = section_between(user, "Original Code:\n\n", "\n\nInstruction:");
  if (!code.empty()) return code;
  return section_between(user, "Code:\n\n", "\n\nFailing Test Cases:");
}

std::string prompt_function_code(const std::string &user) {
  return section_between(user, "Function Code:\n\n", "\n\nTest Case Results:");
}

std::vector<std::string> prompt_test_assertions(const std::string &user) {
  std::string results = section_between(user, "Test Case Results:\n\n", "\n\nInstruction:");
  std::vector<std::string> assertions;
  for (const std::string &line : split_lines(results)) {
    std::string_view t = trim(line);
    if (t.substr(0, 10) != "Test case ") continue;
    std::size_t colon = t.find(": ");
    if (colon == std::string_view::npos) continue;
    assertions.emplace_back(t.substr(colon + 2));
  }
  return assertions;
}

std::size_t prompt_test_count(const std::string &user) {
  return prompt_test_assertions(user).size();
}

std::string first_def_name(const std::string &code) {
  for (const std::string &line : split_lines(code)) {
    std::string_view t = trim(line);
    if (t.substr(0, 4) != "def ") continue;
    std::size_t b = 4;
    while (b < t.size() && t[b] == ' ') ++b;
    std::size_t e = b;
    while (e < t.size() && (is_identifier_char(t[e]))) ++e;
    return std::string(t.substr(b, e - b));
  }
  return "";
}

std::string fenced(const std::string &code) {
  return "```python\n" + code + "\n```";
}

// ---------------------------------------------------------- SyntheticModel

SyntheticModel::SyntheticModel(std::vector<FixtureBehavior> behaviors)
    : behaviors_(std::move(behaviors)) {
  SandboxPolicy policy;
  policy.timeout_per_test = std::chrono::milliseconds(4000);
  real_ = RealExecutor(policy);
}

const FixtureBehavior *SyntheticModel::behavior_for_code(const std::string &code) const {
  for (const FixtureBehavior &b : behaviors_)
    if (contains_word(code, b.entry)) return &b;
  return nullptr;
}

const FixtureBehavior *SyntheticModel::behavior_for_unit(const std::string &unit) const {
  for (const FixtureBehavior &b : behaviors_) {
    if (b.entry == unit) return &b;
    if (b.unit_fixes.count(unit)) return &b;
    if (b.derived_tests.count(unit)) return &b;
    if (!b.decomposed_code.empty() && contains_word(b.decomposed_code, unit)) return &b;
  }
  return nullptr;
}

std::string SyntheticModel::reply(const std::string &, const std::string &user) {
  std::lock_guard<std::mutex> lock(mutex_);
  switch (classify_prompt(user)) {
    case PromptKind::decompose: {
      std::string code = prompt_code_section(user);
      const FixtureBehavior *b = behavior_for_code(code);
      if (b && !b->decomposed_code.empty())
        return "Step by step, the program splits into reusable helpers.\n\n" +
               fenced(b->decomposed_code);
      return "The program is already minimal; keeping it as one function.\n\n" +
             fenced(code);
    }

    case PromptKind::testgen: {
      std::string unit = section_between(user, "analyze how the ", " function is used");
      const FixtureBehavior *b = behavior_for_unit(unit);
      if (b) {
        auto it = b->derived_tests.find(unit);
        if (it != b->derived_tests.end()) {
          std::string block;
          for (const std::string &a : it->second) block += a + "\n";
          return "Following each public test through the main function:\n\n" +
                 fenced(std::string(trim(block)));
        }
      }
      return "I cannot derive reliable test cases for this helper.";
    }

    case PromptKind::simulate: {
      std::string code = prompt_function_code(user);
      std::vector<std::string> assertions = prompt_test_assertions(user);
      ExecutionReport report = real_.run_assertions(code, assertions, "synthetic");
      std::ostringstream out;
      out << "Running each test case against the current implementation, tracking "
             "the key variables line by line.\n\n";
      for (std::size_t i = 0; i < report.results.size(); ++i) {
        const TestOutcome &r = report.results[i];
        if (r.verdict == Verdict::pass) {
          out << "VERDICT " << i << ": PASS\n";
        } else {
          std::string reason = last_line(r.detail);
          if (reason.empty()) reason = "output mismatch";
          out << "VERDICT " << i << ": FAIL - " << reason << "\n";
        }
      }
      return out.str();
    }

    case PromptKind::trace_predict: {
      // Unused by the campaign fixture; predict nothing useful.
      std::vector<std::string> assertions = prompt_test_assertions(user);
      std::ostringstream out;
      for (std::size_t i = 0; i < assertions.size(); ++i)
        out << "CHECKPOINT " << i << ": None\n";
      return out.str();
    }

    case PromptKind::repair: {
      std::string code = prompt_function_code(user);
      // Context below the unit is marked; the unit def comes first.
      std::size_t ctx = code.find("\n\n# Functions called by");
      if (ctx != std::string::npos) code = code.substr(0, ctx);
      std::string unit = first_def_name(code);
      const FixtureBehavior *b = behavior_for_unit(unit);
      if (!b) return "I cannot see a bug.\n\n" + fenced(code);
      int &calls = repair_calls_[b->entry + "/" + unit];
      ++calls;
      if (calls <= b->fix_delay)
        return "The logic looks plausible; returning the function unchanged.\n\n" +
               fenced(code);
      if (unit == b->entry && !b->canonical.empty())
        return "The bug is in the main computation; here is the corrected code.\n\n" +
               fenced(b->canonical);
      auto it = b->unit_fixes.find(unit);
      if (it != b->unit_fixes.end())
        return "The helper mishandles its condition; fixed below.\n\n" + fenced(it->second);
      return "No better candidate found.\n\n" + fenced(code);
    }

    case PromptKind::simple_feedback: {
      std::string code = prompt_code_section(user);
      const FixtureBehavior *b = behavior_for_code(code);
      if (!b || b->canonical.empty())
        return "Here is another attempt.\n\n" + fenced(code);
      int &calls = repair_calls_[b->entry + "/simple"];
      ++calls;
      if (calls <= b->fix_delay) return "Here is another attempt.\n\n" + fenced(code);
      return "Corrected version below.\n\n" + fenced(b->canonical);
    }

    case PromptKind::unknown:
      break;
  }
  return "OK";
}

std::shared_ptr<CallbackBackend> SyntheticModel::backend() {
  return std::make_shared<CallbackBackend>(
      [this](const std::string &system, const std::string &user) {
        return reply(system, user);
      });
}

// ----------------------------------------------------------- oracle / null

std::shared_ptr<CallbackBackend> make_oracle_backend(
    std::shared_ptr<std::map<std::string, std::string>> canon_by_entry) {
  return std::make_shared<CallbackBackend>([canon_by_entry](const std::string &,
                                                            const std::string &user) {
    switch (classify_prompt(user)) {
      case PromptKind::decompose:
        return std::string("Keeping the structure.\n\n") + fenced(prompt_code_section(user));
      case PromptKind::testgen: {
        std::string unit = section_between(user, "analyze how the ", " function is used");
        return std::string("One sanity check per public test:\n\n") +
               fenced("assert callable(" + unit + ")");
      }
      case PromptKind::simulate: {
        std::size_t n = prompt_test_count(user);
        std::ostringstream out;
        for (std::size_t i = 0; i < n; ++i)
          out << "VERDICT " << i << ": FAIL - output mismatch\n";
        return out.str();
      }
      case PromptKind::trace_predict: {
        std::size_t n = prompt_test_count(user);
        std::ostringstream out;
        for (std::size_t i = 0; i < n; ++i) out << "CHECKPOINT " << i << ": None\n";
        return out.str();
      }
      case PromptKind::repair:
      case PromptKind::simple_feedback: {
        std::string code = classify_prompt(user) == PromptKind::repair
                               ? prompt_function_code(user)
                               : prompt_code_section(user);
        for (const auto &[entry, canonical] : *canon_by_entry)
          if (contains_word(code, entry)) return std::string("Fixed:\n\n") + fenced(canonical);
        return std::string("Fixed:\n\n") + fenced(code);
      }
      case PromptKind::unknown:
        break;
    }
    return std::string("OK");
  });
}

std::shared_ptr<CallbackBackend> make_null_backend() {
  return std::make_shared<CallbackBackend>([](const std::string &, const std::string &user) {
    std::string code = prompt_function_code(user);
    if (code.empty()) code = prompt_code_section(user);
    if (code.empty()) return std::string("I do not know.");
    std::size_t ctx = code.find("\n\n# Functions called by");
    if (ctx != std::string::npos) code = code.substr(0, ctx);
    return std::string("Echoing what I was given.\n\n") + fenced(code);
  });
}

std::map<PromptPurpose, int> purpose_census(const std::vector<PromptRecord> &calls) {
  std::map<PromptPurpose, int> census;
  for (const PromptRecord &rec : calls) ++census[rec.purpose];
  return census;
}

// -------------------------------------------------------- campaign fixture

CampaignFixture load_campaign_fixture(const std::string &fixture_dir) {
  CampaignFixture fixture;
  fixture.problems =
      load_benchmark(fixture_dir + "/dataset_fixture.jsonl", DatasetKind::humaneval);
  fixture.seeds = load_seeds(fixture_dir + "/seeds_fixture.jsonl");

  for (const BenchmarkProblem &p : fixture.problems)
    fixture.canonical_by_entry[p.entry_point] = p.canonical_solution;

  auto behavior = [&](const std::string &entry, int fix_delay) {
    FixtureBehavior b;
    b.entry = entry;
    b.canonical = fixture.canonical_by_entry.at(entry);
    b.fix_delay = fix_delay;
    return b;
  };

  // Immediately fixable, single-unit decompositions.
  fixture.behaviors.push_back(behavior("add_one", 0));
  fixture.behaviors.push_back(behavior("double_it", 0));
  fixture.behaviors.push_back(behavior("reverse_words", 0));
  fixture.behaviors.push_back(behavior("interleave", 0));

  // Fixed only after the first attempt's repair budget (3 echoes), so the
  // cumulative curve moves at attempt 2; max_diff moves at attempt 3.
  fixture.behaviors.push_back(behavior("sum_squares", 3));
  fixture.behaviors.push_back(behavior("max_diff", 6));

  // Unfixable: the model keeps echoing the buggy code.
  {
    FixtureBehavior b;
    b.entry = "broken_sort";
    fixture.behaviors.push_back(b);
  }
  {
    FixtureBehavior b;
    b.entry = "prime_count";
    fixture.behaviors.push_back(b);
  }

  // Collatz: decomposed into sequence generation and odd filtering; the bug
  // lives in the filter and is repaired at the leaf.
  {
    FixtureBehavior b = behavior("get_odd_collatz", 0);
    b.decomposed_code =
        "def compute_collatz_sequence(n):\n"
        "    sequence = [n]\n"
        "    while n != 1:\n"
        "        if n % 2 == 0:\n"
        "            n = n // 2\n"
        "        else:\n"
        "            n = 3 * n + 1\n"
        "        sequence.append(n)\n"
        "    return sequence\n"
        "\n"
        "def filter_odd_numbers(sequence):\n"
        "    return sorted(x for x in sequence if x % 2 == 0)\n"
        "\n"
        "def get_odd_collatz(n):\n"
        "    sequence = compute_collatz_sequence(n)\n"
        "    return filter_odd_numbers(sequence)\n";
    b.derived_tests["compute_collatz_sequence"] = {
        "assert compute_collatz_sequence(5) == [5, 16, 8, 4, 2, 1]"};
    b.derived_tests["filter_odd_numbers"] = {
        "assert filter_odd_numbers([5, 16, 8, 4, 2, 1]) == [1, 5]"};
    b.unit_fixes["filter_odd_numbers"] =
        "def filter_odd_numbers(sequence):\n"
        "    return sorted(x for x in sequence if x % 2 == 1)\n";
    fixture.behaviors.push_back(std::move(b));
  }

  // count_vowels: decomposed with a buggy vowel predicate.
  {
    FixtureBehavior b = behavior("count_vowels", 0);
    b.decomposed_code =
        "def is_vowel(ch):\n"
        "    return ch.lower() in 'aeio'\n"
        "\n"
        "def count_vowels(word):\n"
        "    return sum(1 for ch in word if is_vowel(ch))\n";
    b.derived_tests["is_vowel"] = {"assert is_vowel('u') == True",
                                   "assert is_vowel('k') == False"};
    b.unit_fixes["is_vowel"] =
        "def is_vowel(ch):\n"
        "    return ch.lower() in 'aeiou'\n";
    fixture.behaviors.push_back(std::move(b));
  }

  return fixture;
}

}  // namespace mgdbg::testing
