#include "mgdbg/text_util.hpp"

#include <cctype>
#include <sstream>

namespace mgdbg {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string> &lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += lines[i];
    if (i + 1 < lines.size()) out += '\n';
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c));
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

std::string normalize_ws(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

bool is_identifier_start(char c) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c));
}

bool is_identifier_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

bool contains_word(std::string_view text, std::string_view name) {
  if (name.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(name, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_identifier_char(text[pos - 1]);
    std::size_t end = pos + name.size();
    bool right_ok = end >= text.size() || !is_identifier_char(text[end]);
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  if (from.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace mgdbg
