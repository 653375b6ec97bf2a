#pragma once

// Internal string helpers shared by the core translation units.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qcomp::detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// ASCII punctuation only; bytes >= 0x80 (UTF-8 continuation) never count.
inline bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (b < i) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t b = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(b, i - b));
      b = i + 1;
    }
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool valid_utf8(std::string_view s);

// Number of UTF-8 code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

// Percent-encodes every byte outside [A-Za-z0-9._-] so ids become safe file names.
std::string encode_file_name(std::string_view id);
std::string decode_file_name(std::string_view name);

// Writes `data` to `path` via a temporary sibling and rename. Throws StorageError.
void write_file_atomic(const std::string& path, std::string_view data);

}  // namespace qcomp::detail
