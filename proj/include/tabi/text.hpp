#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small UTF-8 helpers. Everything here treats invalid sequences as single
// opaque bytes rather than throwing; model output is not guaranteed clean.
namespace tabi::text {

struct Codepoint {
  char32_t value;
  std::size_t length;  // bytes consumed
};

/// Decodes the codepoint starting at `pos`. Returns nullopt when the sequence
/// is truncated by the end of `s` (more bytes may arrive in a later chunk).
std::optional<Codepoint> next_codepoint(std::string_view s, std::size_t pos);

std::vector<char32_t> decode(std::string_view s);
std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);
std::size_t codepoint_count(std::string_view s);
// Length of the longest prefix made of whole, valid UTF-8 sequences.
std::size_t valid_prefix_length(std::string_view s);

bool is_space(char32_t cp);
std::string_view trim(std::string_view s);
std::string_view trim_left(std::string_view s);
std::string_view trim_right(std::string_view s);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower_ascii(std::string_view s);

/// Replaces CR/LF with single spaces so a value can live on one line.
std::string flatten_newlines(std::string_view s);

/// Expands the `\n` and `\\` escapes used by one-record-per-line script files.
std::string unescape_line(std::string_view s);

}  // namespace tabi::text
