#ifndef MGDBG_TEXT_UTIL_HPP
#define MGDBG_TEXT_UTIL_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mgdbg {

std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string> &lines);

std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);

bool is_blank(std::string_view s);

// Whitespace-delimited token count; used for code-length buckets.
std::size_t count_tokens(std::string_view text);

// Collapses every whitespace run to a single space and trims the ends.
std::string normalize_ws(std::string_view s);

bool is_identifier_char(char c);
bool is_identifier_start(char c);

// True when `name` occurs in `text` delimited by non-identifier characters.
bool contains_word(std::string_view text, std::string_view name);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

}  // namespace mgdbg

#endif  // MGDBG_TEXT_UTIL_HPP
