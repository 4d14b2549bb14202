#include "tabi/text.hpp"

#include "tabi/error.hpp"

namespace tabi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::unknown_template: return "unknown-template";
    case ErrorCode::unbound_slot: return "unbound-slot";
    case ErrorCode::invalid_template: return "invalid-template";
    case ErrorCode::empty_catalog: return "empty-catalog";
    case ErrorCode::empty_history: return "empty-history";
    case ErrorCode::backend_timeout: return "timeout";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::malformed_response: return "malformed-response";
    case ErrorCode::parse_failure: return "parse-failure";
    case ErrorCode::extraction_failure: return "extraction-failure";
    case ErrorCode::catalog_too_small: return "catalog-too-small";
    case ErrorCode::unknown_spot: return "unknown-spot";
    case ErrorCode::no_route: return "no-route";
    case ErrorCode::provider_unavailable: return "provider-unavailable";
    case ErrorCode::day_overflow: return "day-overflow";
    case ErrorCode::unknown_session: return "unknown-session";
    case ErrorCode::session_not_active: return "session-not-active";
    case ErrorCode::utterance_rejected: return "utterance-rejected";
    case ErrorCode::capacity_exceeded: return "capacity-exceeded";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

}  // namespace tabi

namespace tabi::text {

std::optional<Codepoint> next_codepoint(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return std::nullopt;
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t length = 1;
  char32_t value = lead;
  if (lead >= 0xF0 && lead <= 0xF7) {
    length = 4;
    value = lead & 0x07;
  } else if (lead >= 0xE0) {
    length = 3;
    value = lead & 0x0F;
  } else if (lead >= 0xC0) {
    length = 2;
    value = lead & 0x1F;
  } else {
    return Codepoint{value, 1};  // ASCII or stray continuation byte
  }
  if (lead > 0xF7) return Codepoint{lead, 1};
  if (pos + length > s.size()) {
    // Truncated unless one of the available bytes is already invalid.
    for (std::size_t i = pos + 1; i < s.size(); ++i) {
      if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) return Codepoint{lead, 1};
    }
    return std::nullopt;
  }
  for (std::size_t i = 1; i < length; ++i) {
    const auto c = static_cast<unsigned char>(s[pos + i]);
    if ((c & 0xC0) != 0x80) return Codepoint{lead, 1};
    value = (value << 6) | (c & 0x3F);
  }
  return Codepoint{value, length};
}

std::size_t valid_prefix_length(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = next_codepoint(s, pos);
    if (!cp) break;
    pos += cp->length;
  }
  return pos;
}

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto cp = next_codepoint(s, pos);
    if (!cp) {
      out.push_back(static_cast<unsigned char>(s[pos]));
      ++pos;
      continue;
    }
    out.push_back(cp->value);
    pos += cp->length;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) out += encode(cp);
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == U'　';
}

namespace {

constexpr std::string_view kIdeographicSpace = "　";

bool starts_with_space(std::string_view s, std::size_t& len) {
  if (s.empty()) return false;
  if (s.substr(0, kIdeographicSpace.size()) == kIdeographicSpace) {
    len = kIdeographicSpace.size();
    return true;
  }
  len = 1;
  return is_space(static_cast<unsigned char>(s.front()));
}

bool ends_with_space(std::string_view s, std::size_t& len) {
  if (s.empty()) return false;
  if (s.size() >= kIdeographicSpace.size() &&
      s.substr(s.size() - kIdeographicSpace.size()) == kIdeographicSpace) {
    len = kIdeographicSpace.size();
    return true;
  }
  len = 1;
  return is_space(static_cast<unsigned char>(s.back()));
}

}  // namespace

std::string_view trim_left(std::string_view s) {
  std::size_t len = 0;
  while (starts_with_space(s, len)) s.remove_prefix(len);
  return s;
}

std::string_view trim_right(std::string_view s) {
  std::size_t len = 0;
  while (ends_with_space(s, len)) s.remove_suffix(len);
  return s;
}

std::string_view trim(std::string_view s) { return trim_right(trim_left(s)); }

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
  if (from.empty()) return std::string(s);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = s.find(from, pos);
    if (hit == std::string_view::npos) break;
    out.append(s.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s.substr(pos));
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto nl = s.find('\n', pos);
    auto line = s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!lines.empty() && lines.back().empty() && !s.empty() && s.back() == '\n') lines.pop_back();
  if (s.empty()) lines.clear();
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string flatten_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
      out.push_back(' ');
    } else if (s[i] == '\n') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string unescape_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == 'n') {
        out.push_back('\n');
        ++i;
        continue;
      }
      if (s[i + 1] == '\\') {
        out.push_back('\\');
        ++i;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

}  // namespace tabi::text
