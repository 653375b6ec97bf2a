#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/lexical.hpp"

namespace qcomp {

struct Passage {
  std::size_t index = 0;  // position in the source sequence
  std::string text;

  friend bool operator==(const Passage&, const Passage&) = default;
};

struct PassageAnalysis {
  std::size_t index = 0;
  std::size_t freq_score = 0;
};

struct RerankConfig {
  // Minimum total keyword frequency a passage needs to be kept.
  std::size_t threshold = 2;
  std::size_t max_passages = 6;
  bool preserve_order = true;
  // Retry at threshold-1, ..., 1 when nothing survives.
  bool adaptive_fallback = true;

  void validate() const;
};

// Outcome of filtering, with the threshold that produced it.
struct FilterResult {
  std::vector<Passage> passages;
  std::size_t threshold_used = 0;
};

/// Case-insensitive whole-token keyword counts per passage, summed over
/// keywords (multiplicities included). Output is aligned with `passages`.
std::vector<PassageAnalysis> analyze_passages(const std::vector<std::string>& keywords,
                                              const std::vector<Passage>& passages);

/// Passages with freq_score >= threshold, before any truncation, in
/// ascending original index.
std::vector<Passage> kept_passages(const std::vector<PassageAnalysis>& analysis,
                                   const std::vector<Passage>& passages, std::size_t threshold);

FilterResult filter_passages(const std::vector<PassageAnalysis>& analysis, const std::vector<Passage>& passages,
                             const RerankConfig& cfg);

std::vector<Passage> get_filtered_passages(const std::vector<PassageAnalysis>& analysis,
                                           const std::vector<Passage>& passages, const RerankConfig& cfg);

FilterResult rerank_detailed(std::string_view query, const std::vector<Passage>& passages, const RerankConfig& cfg,
                             const PosTagger& tagger);

/// Syntactic reranking: POS-filtered query keywords, frequency scoring,
/// threshold filtering, order-preserving selection of the first
/// max_passages survivors.
std::vector<Passage> rerank(std::string_view query, const std::vector<Passage>& passages, const RerankConfig& cfg,
                            const PosTagger& tagger);

}  // namespace qcomp
