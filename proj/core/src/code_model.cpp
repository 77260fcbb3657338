#include "mgdbg/code_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mgdbg/errors.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

namespace {

const std::unordered_set<std::string> &python_keywords() {
  static const std::unordered_set<std::string> kw = {
      "False",  "None",     "True",  "and",    "as",     "assert", "async",
      "await",  "break",    "class", "continue", "def",  "del",    "elif",
      "else",   "except",   "finally", "for",  "from",   "global", "if",
      "import", "in",       "is",    "lambda", "nonlocal", "not",  "or",
      "pass",   "raise",    "return", "try",   "while",  "with",   "yield"};
  return kw;
}

bool is_string_prefix_char(char c) {
  switch (c) {
    case 'r': case 'R': case 'b': case 'B':
    case 'u': case 'U': case 'f': case 'F':
      return true;
    default:
      return false;
  }
}

// Returns one past the end of the string literal whose opening quote is at
// `quote_pos`. Throws ParseError when the literal never terminates.
std::size_t string_literal_end(const std::string &src, std::size_t quote_pos) {
  const char q = src[quote_pos];
  const std::size_t n = src.size();
  const bool triple =
      quote_pos + 2 < n && src[quote_pos + 1] == q && src[quote_pos + 2] == q;
  std::size_t i = quote_pos + (triple ? 3 : 1);
  while (i < n) {
    char c = src[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (triple) {
      if (c == q && i + 2 < n && src[i + 1] == q && src[i + 2] == q) return i + 3;
      ++i;
    } else {
      if (c == q) return i + 1;
      if (c == '\n') throw Error(ErrorKind::parse_error, "unterminated string literal");
      ++i;
    }
  }
  throw Error(ErrorKind::parse_error, "unterminated string literal");
}

struct LineInfo {
  std::size_t begin = 0;       // offset of first char
  std::size_t end = 0;         // offset one past last char (before '\n')
  bool continuation = false;   // inside brackets or after a trailing backslash
};

struct SegmentedSource {
  std::vector<std::string> raw_lines;
  std::vector<std::string> masked_lines;
  std::vector<bool> continuation;  // per line
};

SegmentedSource segment_lines(const std::string &source, const std::string &masked) {
  SegmentedSource seg;
  seg.raw_lines = split_lines(source);
  seg.masked_lines = split_lines(masked);
  seg.continuation.assign(seg.raw_lines.size(), false);

  long depth = 0;
  bool backslash_join = false;
  for (std::size_t i = 0; i < seg.masked_lines.size(); ++i) {
    seg.continuation[i] = depth > 0 || backslash_join;
    for (char c : seg.masked_lines[i]) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') --depth;
      if (depth < 0) throw Error(ErrorKind::parse_error, "unbalanced brackets");
    }
    std::string_view tail = rtrim(seg.masked_lines[i]);
    backslash_join = !tail.empty() && tail.back() == '\\';
  }
  if (depth != 0) throw Error(ErrorKind::parse_error, "unbalanced brackets at end of input");
  return seg;
}

bool line_is_comment_only(const std::string &raw, const std::string &masked) {
  return is_blank(masked) && !is_blank(raw);
}

struct RawSegment {
  enum class Kind { def, preamble, main_guard } kind;
  std::size_t first_line = 0;  // inclusive; may start at a lead-in comment
  std::size_t last_line = 0;   // inclusive
  std::size_t def_line = 0;    // the `def` header line itself
};

struct ParsedUnits {
  std::string preamble;
  std::vector<FunctionUnit> units;
  std::vector<std::string> warnings;
};

std::string slice_lines(const std::vector<std::string> &lines, std::size_t first,
                        std::size_t last) {
  std::vector<std::string> part(lines.begin() + first, lines.begin() + last + 1);
  while (!part.empty() && is_blank(part.back())) part.pop_back();
  return join_lines(part);
}

// Parses the `def` header starting at line `first`; fills name/signature and
// returns the index of the line holding the header's terminating ':'.
std::size_t parse_def_header(const SegmentedSource &seg, std::size_t first,
                             FunctionUnit &unit) {
  const std::string &masked = seg.masked_lines[first];
  std::size_t pos = masked.find("def");
  pos += 3;
  while (pos < masked.size() && std::isspace(static_cast<unsigned char>(masked[pos]))) ++pos;
  std::size_t name_begin = pos;
  while (pos < masked.size() && is_identifier_char(masked[pos])) ++pos;
  if (pos == name_begin)
    throw Error(ErrorKind::parse_error, "def without a function name");
  unit.name = seg.raw_lines[first].substr(name_begin, pos - name_begin);

  while (pos < masked.size() && std::isspace(static_cast<unsigned char>(masked[pos]))) ++pos;
  if (pos >= masked.size() || masked[pos] != '(')
    throw Error(ErrorKind::parse_error, "def \"" + unit.name + "\" without a parameter list");

  // The parameter list may span lines; walk until depth returns to zero.
  long depth = 0;
  std::string sig;
  std::size_t line = first;
  std::size_t col = pos;
  while (line < seg.masked_lines.size()) {
    const std::string &m = seg.masked_lines[line];
    for (; col < m.size(); ++col) {
      char c = m[col];
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') --depth;
      sig += seg.raw_lines[line][col];
      if (depth == 0) {
        // Header ends with ':' somewhere after the parameter list.
        if (m.find(':', col + 1) == std::string::npos)
          throw Error(ErrorKind::parse_error,
                      "def \"" + unit.name + "\" header missing ':'");
        unit.signature = sig;
        return line;
      }
    }
    sig += '\n';
    ++line;
    col = 0;
  }
  throw Error(ErrorKind::parse_error, "unterminated parameter list in def \"" + unit.name + "\"");
}

std::vector<std::string> nested_def_names(const std::string &masked_source) {
  std::vector<std::string> names;
  for (const std::string &line : split_lines(masked_source)) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0) continue;  // top-level def is the unit itself
    if (line.compare(i, 4, "def ") != 0 && line.compare(i, 4, "def\t") != 0) continue;
    i += 4;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t b = i;
    while (i < line.size() && is_identifier_char(line[i])) ++i;
    if (i > b) names.push_back(line.substr(b, i - b));
  }
  return names;
}

std::string extract_docstring(const std::string &source, const std::string &masked,
                              std::size_t header_last_line) {
  std::vector<std::string> raw_lines = split_lines(source);
  std::vector<std::string> masked_lines = split_lines(masked);
  std::size_t body_first = header_last_line + 1;
  // Offset of body_first within the flat source.
  std::size_t offset = 0;
  for (std::size_t i = 0; i < body_first && i < raw_lines.size(); ++i)
    offset += raw_lines[i].size() + 1;
  // First non-blank body line.
  std::size_t line = body_first;
  while (line < raw_lines.size() && is_blank(raw_lines[line])) {
    offset += raw_lines[line].size() + 1;
    ++line;
  }
  if (line >= raw_lines.size()) return "";
  std::string_view t = trim(raw_lines[line]);
  std::size_t skip = 0;
  while (skip < t.size() && skip < 2 && is_string_prefix_char(t[skip])) ++skip;
  if (skip >= t.size() || (t[skip] != '"' && t[skip] != '\'')) return "";

  std::size_t quote_pos = offset + (t.data() - raw_lines[line].data()) + skip;
  std::size_t end = string_literal_end(source, quote_pos);
  char q = source[quote_pos];
  bool triple = quote_pos + 2 < source.size() && source[quote_pos + 1] == q &&
                source[quote_pos + 2] == q;
  std::size_t content_begin = quote_pos + (triple ? 3 : 1);
  std::size_t content_end = end - (triple ? 3 : 1);
  if (content_end < content_begin) return "";
  return std::string(trim(source.substr(content_begin, content_end - content_begin)));
}

ParsedUnits parse_units(const std::string &source) {
  ParsedUnits out;
  if (is_blank(source)) throw Error(ErrorKind::parse_error, "empty source");

  std::string masked = detail::mask_strings_and_comments(source);
  SegmentedSource seg = segment_lines(source, masked);
  const std::size_t n = seg.raw_lines.size();

  // Top-level statement starts: column zero, not a continuation, not blank.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i) {
    if (seg.continuation[i]) continue;
    const std::string &m = seg.masked_lines[i];
    if (is_blank(m)) continue;
    if (std::isspace(static_cast<unsigned char>(m[0]))) continue;
    starts.push_back(i);
  }
  if (starts.empty()) throw Error(ErrorKind::parse_error, "no top-level statements");

  std::vector<RawSegment> segments;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    RawSegment s;
    s.first_line = starts[k];
    s.def_line = starts[k];
    s.last_line = (k + 1 < starts.size() ? starts[k + 1] - 1 : n - 1);
    const std::string &m = seg.masked_lines[s.first_line];
    std::string_view head = trim(m);
    if (head.size() > 3 && head.substr(0, 3) == "def" &&
        !is_identifier_char(head[3])) {
      s.kind = RawSegment::Kind::def;
    } else if (head.substr(0, std::min<std::size_t>(head.size(), 11)) == "if __name__") {
      s.kind = RawSegment::Kind::main_guard;
    } else {
      s.kind = RawSegment::Kind::preamble;
    }
    segments.push_back(s);
  }

  // Comment lines sitting directly above a def belong to that def.
  std::vector<std::size_t> adjusted_first(segments.size());
  for (std::size_t k = 0; k < segments.size(); ++k) {
    std::size_t first = segments[k].first_line;
    if (segments[k].kind == RawSegment::Kind::def) {
      std::size_t lower = k > 0 ? segments[k - 1].first_line + 1 : 0;
      while (first > lower &&
             line_is_comment_only(seg.raw_lines[first - 1], seg.masked_lines[first - 1]))
        --first;
    }
    adjusted_first[k] = first;
  }
  for (std::size_t k = 0; k + 1 < segments.size(); ++k)
    segments[k].last_line = std::min(segments[k].last_line, adjusted_first[k + 1] - 1);
  for (std::size_t k = 0; k < segments.size(); ++k)
    segments[k].first_line = adjusted_first[k];

  std::vector<std::string> preamble_parts;
  bool preamble_after_def = false;
  bool saw_def = false;
  for (const RawSegment &s : segments) {
    if (s.kind == RawSegment::Kind::main_guard) {
      out.warnings.push_back("dropped top-level __main__ guard block");
      continue;
    }
    if (s.kind == RawSegment::Kind::preamble) {
      std::string text = slice_lines(seg.raw_lines, s.first_line, s.last_line);
      if (!is_blank(text)) {
        preamble_parts.push_back(text);
        if (saw_def) preamble_after_def = true;
      }
      continue;
    }
    saw_def = true;
    FunctionUnit unit;
    std::size_t header_end = parse_def_header(seg, s.def_line, unit);
    unit.source = slice_lines(seg.raw_lines, s.first_line, s.last_line);
    std::string unit_masked;
    {
      std::vector<std::string> ml(seg.masked_lines.begin() + s.first_line,
                                  seg.masked_lines.begin() + s.last_line + 1);
      while (ml.size() > split_lines(unit.source).size()) ml.pop_back();
      unit_masked = join_lines(ml);
    }
    unit.docstring = extract_docstring(unit.source, unit_masked,
                                       header_end - s.first_line);
    unit.token_count = count_tokens(unit.source);
    // Raw call names; filtered against unit names by the caller.
    std::vector<std::string> called = detail::scan_called_names(unit_masked, unit.source);
    std::vector<std::string> nested = nested_def_names(unit_masked);
    for (const std::string &c : called) {
      if (std::find(nested.begin(), nested.end(), c) != nested.end()) continue;
      unit.callees.push_back(c);
    }
    out.units.push_back(std::move(unit));
  }
  if (preamble_after_def)
    out.warnings.push_back("top-level statements between functions moved to preamble");

  std::string preamble;
  for (std::size_t i = 0; i < preamble_parts.size(); ++i) {
    if (i) preamble += "\n\n";
    preamble += preamble_parts[i];
  }
  out.preamble = preamble;
  return out;
}

}  // namespace

namespace detail {

std::string mask_strings_and_comments(const std::string &source) {
  std::string out = source;
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    char c = source[i];
    if (c == '#') {
      while (i < n && source[i] != '\n') out[i++] = ' ';
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t end = string_literal_end(source, i);
      for (std::size_t j = i; j < end && j < n; ++j)
        if (source[j] != '\n') out[j] = ' ';
      i = end;
      continue;
    }
    ++i;
  }
  return out;
}

std::vector<std::string> scan_called_names(const std::string &masked_body,
                                           const std::string &body) {
  (void)body;
  std::vector<std::string> names;
  std::set<std::string> seen;
  const std::size_t n = masked_body.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_identifier_start(masked_body[i]) ||
        (i > 0 && is_identifier_char(masked_body[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t b = i;
    while (i < n && is_identifier_char(masked_body[i])) ++i;
    std::string ident = masked_body.substr(b, i - b);

    // Attribute access (obj.method) is not a unit call.
    std::size_t p = b;
    while (p > 0 && (masked_body[p - 1] == ' ' || masked_body[p - 1] == '\t')) --p;
    if (p > 0 && masked_body[p - 1] == '.') continue;
    // The name right after def/class is a definition, not a call.
    if (p > 0) {
      std::size_t e = p;
      while (p > 0 && is_identifier_char(masked_body[p - 1])) --p;
      std::string prev = masked_body.substr(p, e - p);
      if (prev == "def" || prev == "class") continue;
    }
    if (python_keywords().count(ident)) continue;

    std::size_t q = i;
    while (q < n && (masked_body[q] == ' ' || masked_body[q] == '\t')) ++q;
    if (q < n && masked_body[q] == '(') {
      if (seen.insert(ident).second) names.push_back(ident);
    }
  }
  return names;
}

}  // namespace detail

bool FunctionUnit::calls(const std::string &unit_name) const {
  return std::find(callees.begin(), callees.end(), unit_name) != callees.end();
}

const FunctionUnit *CodeArtifact::find(const std::string &name) const {
  for (const FunctionUnit &u : units)
    if (u.name == name) return &u;
  return nullptr;
}

FunctionUnit *CodeArtifact::find(const std::string &name) {
  for (FunctionUnit &u : units)
    if (u.name == name) return &u;
  return nullptr;
}

std::vector<std::string> CodeArtifact::unit_names() const {
  std::vector<std::string> names;
  names.reserve(units.size());
  for (const FunctionUnit &u : units) names.push_back(u.name);
  return names;
}

CodeArtifact parse_artifact(const std::string &source, const std::string &entry_point) {
  ParsedUnits parsed = parse_units(source);
  if (parsed.units.empty())
    throw Error(ErrorKind::parse_error, "no top-level function definitions");

  CodeArtifact artifact;
  artifact.raw_source = source;
  artifact.preamble = parsed.preamble;
  artifact.warnings = parsed.warnings;

  // Python semantics: a re-defined name is overridden by the later def.
  for (FunctionUnit &u : parsed.units) {
    if (FunctionUnit *existing = [&]() -> FunctionUnit * {
          for (FunctionUnit &e : artifact.units)
            if (e.name == u.name) return &e;
          return nullptr;
        }()) {
      artifact.warnings.push_back("duplicate definition of \"" + u.name +
                                  "\"; keeping the later one");
      *existing = std::move(u);
    } else {
      artifact.units.push_back(std::move(u));
    }
  }

  std::set<std::string> names;
  for (const FunctionUnit &u : artifact.units) names.insert(u.name);
  for (FunctionUnit &u : artifact.units) {
    std::vector<std::string> filtered;
    for (const std::string &c : u.callees)
      if (names.count(c)) filtered.push_back(c);
    u.callees = std::move(filtered);
  }

  if (!names.count(entry_point)) {
    std::string have;
    for (const FunctionUnit &u : artifact.units) {
      if (!have.empty()) have += ", ";
      have += u.name;
    }
    throw Error(ErrorKind::missing_entry_point,
                "\"" + entry_point + "\" not defined (have: " + have + ")");
  }
  artifact.entry_point = entry_point;
  return artifact;
}

DecompositionTree build_tree(CodeArtifact artifact) {
  DecompositionTree tree;
  tree.root = artifact.entry_point;
  tree.warnings = artifact.warnings;

  std::set<std::string> visited;
  std::vector<std::string> stack;

  // DFS in first-call order; self and back edges are dropped from children
  // so the structure stays acyclic, cross edges keep shared nodes shared.
  auto visit = [&](auto &&self, const std::string &name) -> void {
    visited.insert(name);
    stack.push_back(name);
    tree.children[name];  // ensure an entry even for leaves
    const FunctionUnit *unit = artifact.find(name);
    for (const std::string &callee : unit->callees) {
      if (callee == name ||
          std::find(stack.begin(), stack.end(), callee) != stack.end()) {
        tree.warnings.push_back("cycle edge " + name + " -> " + callee +
                                " dropped from children");
        continue;
      }
      tree.children[name].push_back(callee);
      if (!visited.count(callee)) self(self, callee);
    }
    stack.pop_back();
  };
  visit(visit, tree.root);

  for (const FunctionUnit &u : artifact.units)
    if (!visited.count(u.name))
      tree.warnings.push_back("unit \"" + u.name + "\" unreachable from " +
                              tree.root + "; dropped from tree");

  tree.artifact = std::move(artifact);
  return tree;
}

std::vector<std::string> DecompositionTree::post_order() const {
  std::vector<std::string> order;
  std::set<std::string> done;
  auto visit = [&](auto &&self, const std::string &name) -> void {
    done.insert(name);
    auto it = children.find(name);
    if (it != children.end())
      for (const std::string &c : it->second)
        if (!done.count(c)) self(self, c);
    order.push_back(name);
  };
  visit(visit, root);
  return order;
}

bool DecompositionTree::contains(const std::string &name) const {
  return children.count(name) > 0;
}

const FunctionUnit &DecompositionTree::unit(const std::string &name) const {
  const FunctionUnit *u = artifact.find(name);
  if (!u) throw Error(ErrorKind::unknown_unit, "\"" + name + "\" not in artifact");
  return *u;
}

std::string DecompositionTree::subtree_source(const std::string &name) const {
  if (!artifact.find(name))
    throw Error(ErrorKind::unknown_unit, "\"" + name + "\" not in artifact");
  std::vector<std::string> order;
  std::set<std::string> done;
  auto visit = [&](auto &&self, const std::string &n) -> void {
    done.insert(n);
    auto it = children.find(n);
    if (it != children.end())
      for (const std::string &c : it->second)
        if (!done.count(c)) self(self, c);
    order.push_back(n);
  };
  visit(visit, name);
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += "\n\n";
    out += unit(order[i]).source;
  }
  return out;
}

std::string DecompositionTree::descendant_source(const std::string &name) const {
  std::string whole = subtree_source(name);
  const std::string &own = unit(name).source;
  if (whole.size() == own.size()) return "";
  // The unit itself is always last in the subtree flatten.
  std::string out = whole.substr(0, whole.size() - own.size());
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string flatten(const DecompositionTree &tree) {
  std::string out;
  std::string_view preamble = rtrim(tree.artifact.preamble);
  if (!preamble.empty()) {
    out += preamble;
    out += "\n\n";
  }
  std::vector<std::string> order = tree.post_order();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += "\n\n";
    out += tree.unit(order[i]).source;
  }
  out += "\n";
  return out;
}

DecompositionTree replace_unit(const DecompositionTree &tree, const std::string &name,
                               const std::string &new_source) {
  if (!tree.artifact.find(name))
    throw Error(ErrorKind::unknown_unit, "\"" + name + "\" not in artifact");

  ParsedUnits parsed = parse_units(new_source);
  if (parsed.units.size() != 1)
    throw Error(ErrorKind::parse_error,
                "replacement must be exactly one function definition, got " +
                    std::to_string(parsed.units.size()));
  if (!is_blank(parsed.preamble))
    throw Error(ErrorKind::parse_error,
                "replacement contains top-level statements outside the definition");
  if (parsed.units[0].name != name)
    throw Error(ErrorKind::signature_rename,
                "replacement defines \"" + parsed.units[0].name + "\", expected \"" +
                    name + "\"");

  // Rebuild the raw source with the unit swapped in definition order, then
  // re-parse so callees and children are recomputed consistently.
  std::string rebuilt;
  std::string_view preamble = rtrim(tree.artifact.preamble);
  if (!preamble.empty()) {
    rebuilt += preamble;
    rebuilt += "\n\n";
  }
  const auto &units = tree.artifact.units;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i) rebuilt += "\n\n";
    rebuilt += units[i].name == name ? parsed.units[0].source : units[i].source;
  }
  rebuilt += "\n";
  return build_tree(parse_artifact(rebuilt, tree.artifact.entry_point));
}

std::vector<std::string> signature_param_names(const std::string &signature) {
  std::vector<std::string> names;
  std::string_view s = trim(signature);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')')
    s = s.substr(1, s.size() - 2);

  long depth = 0;
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);

  for (const std::string &raw : parts) {
    std::string_view p = trim(raw);
    while (!p.empty() && p.front() == '*') p.remove_prefix(1);
    p = trim(p);
    if (p.empty() || p.front() == '/') continue;
    std::size_t i = 0;
    while (i < p.size() && is_identifier_char(p[i])) ++i;
    if (i > 0) names.emplace_back(p.substr(0, i));
  }
  return names;
}

}  // namespace mgdbg
