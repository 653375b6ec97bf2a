#pragma once

// SQuAD-style answer F1, following the official evaluation script:
// lower -> drop punctuation -> drop articles -> squeeze whitespace.

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::string squad_normalize(const std::string& s) {
  std::string text;
  for (unsigned char c : s) text += static_cast<char>(std::tolower(c));
  std::string no_punct;
  for (unsigned char c : text) {
    if (!(c < 128 && std::ispunct(c))) no_punct += static_cast<char>(c);
  }
  static const std::regex articles("\\b(a|an|the)\\b");
  const auto no_articles = std::regex_replace(no_punct, articles, " ");
  std::istringstream in(no_articles);
  std::string w, out;
  while (in >> w) out += (out.empty() ? "" : " ") + w;
  return out;
}

inline double squad_f1(const std::string& prediction, const std::string& gold) {
  std::vector<std::string> p, g;
  std::string w;
  for (std::istringstream in(squad_normalize(prediction)); in >> w;) p.push_back(w);
  for (std::istringstream in(squad_normalize(gold)); in >> w;) g.push_back(w);
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;
  std::map<std::string, int> pc, gc;
  for (const auto& t : p) ++pc[t];
  for (const auto& t : g) ++gc[t];
  int same = 0;
  for (const auto& [t, c] : pc) {
    if (auto it = gc.find(t); it != gc.end()) same += std::min(c, it->second);
  }
  if (same == 0) return 0.0;
  const double precision = 1.0 * same / static_cast<double>(p.size());
  const double recall = 1.0 * same / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

inline double squad_f1_max(const std::string& prediction, const std::vector<std::string>& golds) {
  double best = 0;
  for (const auto& g : golds) best = std::max(best, squad_f1(prediction, g));
  return best;
}

}  // namespace oracle
