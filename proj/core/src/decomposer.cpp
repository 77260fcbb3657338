#include "mgdbg/decomposer.hpp"

#include "mgdbg/errors.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

DecompositionTree decompose(const std::string &code, const std::string &entry_point,
                            Gateway &gateway) {
  CodeArtifact original = parse_artifact(code, entry_point);
  std::vector<std::string> original_params =
      signature_param_names(original.find(entry_point)->signature);

  RenderedPrompt prompt = render_prompt(TemplateId::decompose, {{"code", code}});

  auto parse = [&](const std::string &reply) {
    std::string block = extract_code_block(reply);
    CodeArtifact artifact = parse_artifact(block, entry_point);
    // Hidden tests call the entry point by name and position; a decomposition
    // that changes the parameter list would break them.
    std::vector<std::string> params =
        signature_param_names(artifact.find(entry_point)->signature);
    if (params != original_params)
      throw Error(ErrorKind::signature_rename,
                  "decomposition changed the parameter list of " + entry_point);
    return build_tree(std::move(artifact));
  };

  try {
    return complete_with_retries<DecompositionTree>(
        gateway, TemplateId::decompose, PromptPurpose::decompose, prompt, parse);
  } catch (const Error &e) {
    throw Error(ErrorKind::decomposition_failed, e.what());
  }
}

ValidationVerdict validate_decomposition(const DecompositionTree &tree,
                                         const std::string &original,
                                         const PublicTestSet &visible_tests,
                                         const RealExecutor &executor) {
  ValidationVerdict verdict;
  std::string flat = flatten(tree);

  if (auto err = executor.syntax_error(flat)) {
    verdict.fatal = true;
    verdict.equivalent = false;
    verdict.warnings.push_back("flattened decomposition does not compile: " + *err);
    return verdict;
  }
  if (visible_tests.empty()) return verdict;

  ExecutionReport before = executor.run_assertions(original, visible_tests.tests, tree.root);
  ExecutionReport after = executor.run_assertions(flat, visible_tests.tests, tree.root);
  for (std::size_t i = 0; i < visible_tests.tests.size(); ++i) {
    ValidationVerdict::TestComparison cmp;
    cmp.test_index = static_cast<int>(i);
    cmp.original = before.results[i].verdict;
    cmp.decomposed = after.results[i].verdict;
    if (cmp.original != cmp.decomposed) {
      verdict.equivalent = false;
      verdict.warnings.push_back(
          "visible test " + std::to_string(i) + " diverges after decomposition (" +
          verdict_name(cmp.original) + " -> " + verdict_name(cmp.decomposed) + ")");
    }
    verdict.comparisons.push_back(cmp);
  }
  return verdict;
}

DecompositionTree decompose_with_fallback(const std::string &code,
                                          const std::string &entry_point, Gateway &gateway,
                                          const RealExecutor *executor,
                                          const PublicTestSet &visible_tests, bool strict,
                                          std::vector<std::string> &warnings) {
  auto original_tree = [&]() { return build_tree(parse_artifact(code, entry_point)); };

  DecompositionTree tree;
  try {
    tree = decompose(code, entry_point, gateway);
  } catch (const Error &e) {
    warnings.push_back(std::string("decomposition failed, using original structure: ") +
                       e.what());
    return original_tree();
  }

  if (executor) {
    ValidationVerdict verdict = validate_decomposition(tree, code, visible_tests, *executor);
    for (const std::string &w : verdict.warnings) warnings.push_back(w);
    if (verdict.fatal) {
      warnings.push_back("decomposition rejected (does not compile); using original structure");
      return original_tree();
    }
    if (strict && !verdict.equivalent) {
      warnings.push_back(
          "decomposition rejected (not equivalent on visible tests, strict mode)");
      return original_tree();
    }
  }
  return tree;
}

}  // namespace mgdbg
