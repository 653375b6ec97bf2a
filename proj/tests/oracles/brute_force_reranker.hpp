#pragma once

// Brute-force reference for keyword-frequency passage selection.

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oracle_text.hpp"

namespace oracle {

struct RefPassage {
  std::size_t index;
  std::string text;
};

struct RefSelection {
  std::vector<std::size_t> indices;
  std::size_t threshold = 0;
};

// Query words minus the excluded closed-class words, lowercased, first
// occurrence kept.
inline std::vector<std::string> query_keywords(const std::string& query, const std::set<std::string>& excluded) {
  std::vector<std::string> out;
  for (const auto& w : words(query)) {
    const auto lw = lower(w);
    if (excluded.count(lw)) continue;
    if (std::find(out.begin(), out.end(), lw) == out.end()) out.push_back(lw);
  }
  return out;
}

inline std::size_t keyword_frequency(const std::vector<std::string>& keywords, const std::string& text) {
  const auto toks = words(text);
  std::size_t total = 0;
  for (const auto& k : keywords) {
    for (const auto& t : toks) {
      if (lower(t) == lower(k)) ++total;
    }
  }
  return total;
}

inline std::vector<std::size_t> kept_at(const std::vector<std::string>& keywords,
                                        const std::vector<RefPassage>& passages, std::size_t threshold) {
  std::vector<std::size_t> kept;
  for (const auto& p : passages) {
    if (keyword_frequency(keywords, p.text) >= threshold) kept.push_back(p.index);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline RefSelection select(const std::vector<std::string>& keywords, const std::vector<RefPassage>& passages,
                           std::size_t threshold, std::size_t max_passages, bool fallback) {
  RefSelection out;
  for (std::size_t t = threshold; t >= 1; --t) {
    out.indices = kept_at(keywords, passages, t);
    out.threshold = t;
    if (!out.indices.empty() || !fallback) break;
  }
  if (out.indices.size() > max_passages) out.indices.resize(max_passages);
  return out;
}

}  // namespace oracle
