#ifndef MGDBG_CODE_MODEL_HPP
#define MGDBG_CODE_MODEL_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mgdbg {

/// One top-level function definition of the subject program.
struct FunctionUnit {
  std::string name;
  std::string signature;   // parameter list as written, including parentheses
  std::string source;      // full definition: header line(s) plus body
  std::string docstring;   // empty when the unit has none
  std::vector<std::string> callees;  // unit names called from the body, first-call order
  std::size_t token_count = 0;       // whitespace-delimited tokens of `source`

  bool calls(const std::string &unit_name) const;
};

/// A parsed single-file program: preamble (imports/constants) plus its
/// top-level function units, in definition order.
struct CodeArtifact {
  std::string raw_source;
  std::vector<FunctionUnit> units;
  std::string entry_point;
  std::string preamble;
  std::vector<std::string> warnings;

  const FunctionUnit *find(const std::string &name) const;
  FunctionUnit *find(const std::string &name);
  std::vector<std::string> unit_names() const;
};

/// Rooted call structure over a CodeArtifact. Children lists share nodes
/// (a unit called by several parents is a single node); self and back
/// edges are dropped so traversal terminates.
struct DecompositionTree {
  std::string root;
  std::map<std::string, std::vector<std::string>> children;
  CodeArtifact artifact;
  std::vector<std::string> warnings;

  // Reachable units, children strictly before parents, root last.
  std::vector<std::string> post_order() const;
  bool contains(const std::string &name) const;
  const FunctionUnit &unit(const std::string &name) const;

  // Flatten of the subtree rooted at `name` (its unit plus every reachable
  // descendant), dependencies first. No preamble.
  std::string subtree_source(const std::string &name) const;
  // Sources of the proper descendants of `name`, dependencies first.
  std::string descendant_source(const std::string &name) const;
};

// Throws ParseError / MissingEntryPoint.
CodeArtifact parse_artifact(const std::string &source, const std::string &entry_point);

// Never fails; cycles and unreachable units degrade to warnings.
DecompositionTree build_tree(CodeArtifact artifact);

// Preamble first, then every reachable unit in post order (root last).
std::string flatten(const DecompositionTree &tree);

// Swaps one unit's source and rebuilds the call structure.
// Throws SignatureRename when the new definition is not named `name`,
// ParseError when it is not exactly one function definition,
// UnknownUnit when `name` is not in the tree's artifact.
DecompositionTree replace_unit(const DecompositionTree &tree, const std::string &name,
                               const std::string &new_source);

// Parameter names of a `def` parameter list, annotations and defaults
// stripped. "(n: int, m=3)" -> {"n", "m"}.
std::vector<std::string> signature_param_names(const std::string &signature);

namespace detail {
// Copy of `source` with string literal and comment contents blanked out
// (newlines kept), so structural scans cannot be fooled by quoted code.
// Throws ParseError for unterminated string literals.
std::string mask_strings_and_comments(const std::string &source);

// Call-expression names in `masked_body` (identifier followed by '('),
// excluding keyword contexts, attribute access and definitions.
std::vector<std::string> scan_called_names(const std::string &masked_body,
                                           const std::string &body);
}  // namespace detail

}  // namespace mgdbg

#endif  // MGDBG_CODE_MODEL_HPP
