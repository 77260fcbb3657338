#ifndef MGDBG_PROMPT_TEMPLATES_HPP
#define MGDBG_PROMPT_TEMPLATES_HPP

#include <map>
#include <string>

namespace mgdbg {

enum class TemplateId { decompose, testgen, debug, simple_feedback };

const char *template_id_name(TemplateId id);
TemplateId template_id_from_name(const std::string &name);

struct PromptTemplate {
  std::string system;
  std::string user;
};

const PromptTemplate &prompt_template(TemplateId id);

struct RenderedPrompt {
  std::string system;
  std::string user;
};

// Substitutes every {placeholder} of the template verbatim from `slots`.
// Throws MissingSlot when a placeholder has no entry.
RenderedPrompt render_prompt(TemplateId id,
                             const std::map<std::string, std::string> &slots);

// Instruction block appended to the debug prompt when it is used to simulate
// test execution; asks for one machine-readable verdict line per test.
extern const char *kVerdictTrailerInstruction;

// Instruction block appended when predicted values are compared against an
// instrumented real run.
extern const char *kCheckpointTrailerInstruction;

}  // namespace mgdbg

#endif  // MGDBG_PROMPT_TEMPLATES_HPP
