#pragma once

// Reference word splitting for the oracles. Kept apart from the library on
// purpose: a separator is whitespace, '-' or ','; ASCII punctuation is then
// peeled off both ends of every piece.

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline bool ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> pieces(1);
  for (unsigned char c : text) {
    if (std::isspace(c) || c == '-' || c == ',') {
      if (!pieces.back().empty()) pieces.emplace_back();
    } else {
      pieces.back() += static_cast<char>(c);
    }
  }
  std::vector<std::string> out;
  for (auto& p : pieces) {
    std::size_t b = 0, e = p.size();
    while (b < e && ascii_punct(static_cast<unsigned char>(p[b]))) ++b;
    while (e > b && ascii_punct(static_cast<unsigned char>(p[e - 1]))) --e;
    if (e > b) out.push_back(p.substr(b, e - b));
  }
  return out;
}

inline std::string lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

inline std::set<std::string> read_word_list(const std::string& path) {
  std::ifstream in(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string w;
    if (ls >> w && w[0] != '#') out.insert(lower(w));
  }
  return out;
}

}  // namespace oracle
