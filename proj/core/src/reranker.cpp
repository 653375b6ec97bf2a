#include "qcomp/reranker.hpp"

#include <algorithm>
#include <unordered_map>

#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"

namespace qcomp {

void RerankConfig::validate() const {
  if (threshold < 1) throw InputError("rerank threshold L must be >= 1");
  if (max_passages < 1) throw InputError("max_passages must be >= 1");
}

std::vector<PassageAnalysis> analyze_passages(const std::vector<std::string>& keywords,
                                              const std::vector<Passage>& passages) {
  // A keyword listed twice counts twice.
  std::unordered_map<std::string, std::size_t> weight;
  for (const auto& k : keywords) ++weight[to_lower_ascii(k)];

  std::vector<PassageAnalysis> out;
  out.reserve(passages.size());
  for (const auto& p : passages) {
    std::size_t score = 0;
    if (!weight.empty()) {
      for (const auto& w : tokenize_words(p.text)) {
        if (auto it = weight.find(to_lower_ascii(w)); it != weight.end()) score += it->second;
      }
    }
    out.push_back({p.index, score});
  }
  return out;
}

std::vector<Passage> kept_passages(const std::vector<PassageAnalysis>& analysis,
                                   const std::vector<Passage>& passages, std::size_t threshold) {
  if (analysis.size() != passages.size()) throw InputError("analysis and passages are not aligned");
  std::vector<Passage> kept;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (analysis[i].index != passages[i].index) throw InputError("analysis and passages are not aligned");
    if (analysis[i].freq_score >= threshold) kept.push_back(passages[i]);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Passage& l, const Passage& r) { return l.index < r.index; });
  return kept;
}

FilterResult filter_passages(const std::vector<PassageAnalysis>& analysis, const std::vector<Passage>& passages,
                             const RerankConfig& cfg) {
  cfg.validate();
  std::size_t threshold = cfg.threshold;
  auto kept = kept_passages(analysis, passages, threshold);
  while (kept.empty() && cfg.adaptive_fallback && threshold > 1) {
    --threshold;
    kept = kept_passages(analysis, passages, threshold);
  }

  if (!cfg.preserve_order) {
    std::unordered_map<std::size_t, std::size_t> score_of;
    for (const auto& a : analysis) score_of[a.index] = a.freq_score;
    std::stable_sort(kept.begin(), kept.end(), [&](const Passage& l, const Passage& r) {
      const auto ls = score_of[l.index], rs = score_of[r.index];
      if (ls != rs) return ls > rs;
      return l.index < r.index;
    });
  }
  if (kept.size() > cfg.max_passages) kept.resize(cfg.max_passages);
  return {std::move(kept), threshold};
}

std::vector<Passage> get_filtered_passages(const std::vector<PassageAnalysis>& analysis,
                                           const std::vector<Passage>& passages, const RerankConfig& cfg) {
  return filter_passages(analysis, passages, cfg).passages;
}

FilterResult rerank_detailed(std::string_view query, const std::vector<Passage>& passages, const RerankConfig& cfg,
                             const PosTagger& tagger) {
  const auto keywords = extract_keywords_by_pos(query, tagger);
  return filter_passages(analyze_passages(keywords, passages), passages, cfg);
}

std::vector<Passage> rerank(std::string_view query, const std::vector<Passage>& passages, const RerankConfig& cfg,
                            const PosTagger& tagger) {
  return rerank_detailed(query, passages, cfg, tagger).passages;
}

}  // namespace qcomp
