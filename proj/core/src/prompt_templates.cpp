#include "mgdbg/prompt_templates.hpp"

#include "mgdbg/errors.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

namespace {

const PromptTemplate kDecompose = {
    "",
    R"(Convert the following Python code into a tree-style hierarchical structure with multiple levels of sub-functions.
Each significant step or logical block should be its own function, and functions can call other sub-functions.
Ensure that the main function calls these sub-functions in the correct order, creating a tree-like structure.

Original Code:

{code}

Instruction:

Please first analyze the codes step by step, and then provide the converted code in a Python code block. When providing the final converted code, make sure to include all the functions in a flattened format, where each function is defined separately.)"};

const PromptTemplate kTestgen = {
    "You are an AI assistant specialized in analyzing Python functions and "
    "generating test cases.",
    R"(Full Code:

{full_code}

Public Test Cases for the Main Function:

{public_test_cases}

Instruction:

Please analyze how the {function_name} function is used within the main function and how it contributes to the expected outputs in the gold test cases. For each test case, you should analyze step-by-step based on both the input and the expected output of the main function, and then provide the corresponding input and expected output for the {function_name} function. Ensure that the generated test cases are consistent with the behavior expected in the public test cases.)"};

const PromptTemplate kDebug = {
    "You are an AI assistant helping to debug Python functions.",
    R"(Debug the following Python function. The function is not passing all test cases. Analyze the code, identify the bug, and provide a fixed version of the function.

Function Code:

{function_code}

Test Case Results:

{test_case_results}

Instruction:

Please try to work as a Python interpreter to execute the code step-by-step. Identify the change of each variable as you "run" the code line-by-line. Based on the execution trace, try to identify the bug and provide the final fixed code in a Python code block.)"};

const PromptTemplate kSimpleFeedback = {
    "You are an AI assistant helping to debug Python functions.",
    R"(The code below is incorrect: it does not pass all of the test cases. Please fix it.

Code:

{code}

Failing Test Cases:

{test_case_results}

Instruction:

Please provide the fixed code in a Python code block.)"};

}  // namespace

const char *kVerdictTrailerInstruction =
    R"(After your analysis, also output one line per test case, in exactly this format and nothing after it:
VERDICT <test index>: PASS
or
VERDICT <test index>: FAIL - <short reason>)";

const char *kCheckpointTrailerInstruction =
    R"(After your analysis, also output one line per test case, in exactly this format and nothing after it:
CHECKPOINT <test index>: <the value the tested call evaluates to, written as a Python repr>)";

const char *template_id_name(TemplateId id) {
  switch (id) {
    case TemplateId::decompose: return "decompose";
    case TemplateId::testgen: return "testgen";
    case TemplateId::debug: return "debug";
    case TemplateId::simple_feedback: return "simple_feedback";
  }
  return "unknown";
}

TemplateId template_id_from_name(const std::string &name) {
  if (name == "decompose") return TemplateId::decompose;
  if (name == "testgen") return TemplateId::testgen;
  if (name == "debug") return TemplateId::debug;
  if (name == "simple_feedback") return TemplateId::simple_feedback;
  throw Error(ErrorKind::schema_error, "unknown template id \"" + name + "\"");
}

const PromptTemplate &prompt_template(TemplateId id) {
  switch (id) {
    case TemplateId::decompose: return kDecompose;
    case TemplateId::testgen: return kTestgen;
    case TemplateId::debug: return kDebug;
    case TemplateId::simple_feedback: return kSimpleFeedback;
  }
  return kDebug;
}

namespace {

std::string substitute(const std::string &text,
                       const std::map<std::string, std::string> &slots) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '{') {
      std::size_t close = text.find('}', i + 1);
      if (close != std::string::npos) {
        std::string key = text.substr(i + 1, close - i - 1);
        bool is_name = !key.empty() && is_identifier_start(key[0]);
        for (char k : key)
          if (!is_identifier_char(k)) is_name = false;
        if (is_name) {
          auto it = slots.find(key);
          if (it == slots.end())
            throw Error(ErrorKind::missing_slot, "no value for placeholder {" + key + "}");
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace

RenderedPrompt render_prompt(TemplateId id,
                             const std::map<std::string, std::string> &slots) {
  const PromptTemplate &t = prompt_template(id);
  return RenderedPrompt{substitute(t.system, slots), substitute(t.user, slots)};
}

}  // namespace mgdbg
