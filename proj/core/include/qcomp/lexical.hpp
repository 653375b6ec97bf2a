#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qcomp {

// Universal POS tag set (coarse).
enum class PosTag { ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM, PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X };

std::string_view to_string(PosTag tag);

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  // Tags tokens[i]; the full token sequence is available as context.
  virtual PosTag tag(std::span<const std::string> tokens, std::size_t i) const = 0;
};

// Closed-class lexicon tagger: ADP and CCONJ from word lists, NOUN otherwise.
class LexiconTagger final : public PosTagger {
 public:
  LexiconTagger();  // bundled English lexicons
  LexiconTagger(std::set<std::string> adp, std::set<std::string> cconj);

  // One lowercase word per line; blank lines and '#' comments ignored.
  // Throws InputError when the file cannot be read.
  static LexiconTagger from_files(const std::string& adp_path, const std::string& cconj_path);

  PosTag tag(std::span<const std::string> tokens, std::size_t i) const override;

  const std::set<std::string>& adp() const { return adp_; }
  const std::set<std::string>& cconj() const { return cconj_; }

 private:
  std::set<std::string> adp_;
  std::set<std::string> cconj_;
};

const std::vector<std::string>& default_adp_lexicon();
const std::vector<std::string>& default_cconj_lexicon();
std::set<std::string> read_lexicon_file(const std::string& path);

/// Query keywords for the syntactic reranker: tokenize_words, drop ADP and
/// CCONJ tokens, lowercase, dedupe keeping the first occurrence.
std::vector<std::string> extract_keywords_by_pos(std::string_view query, const PosTagger& tagger);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  void validate() const;
};

// Immutable after bm25_build; safe for concurrent scoring.
struct Bm25Index {
  Bm25Params params;
  std::vector<std::string> doc_ids;
  std::vector<std::size_t> doc_lengths;
  std::vector<std::unordered_map<std::string, std::size_t>> term_frequencies;
  std::unordered_map<std::string, std::size_t> document_frequencies;
  double avg_doc_length = 0.0;

  std::size_t size() const { return doc_ids.size(); }
  double idf(const std::string& term) const;
};

Bm25Index bm25_build(const std::vector<std::pair<std::string, std::string>>& texts, const Bm25Params& params = {});

/// Okapi BM25 with IDF = ln((N - df + 0.5) / (df + 0.5) + 1). Every document
/// is returned; order is descending score then ascending id. Query terms are
/// case-folded tokenize_words output; repeated terms count once per repeat.
std::vector<std::pair<std::string, double>> bm25_score(const Bm25Index& index, std::string_view query);

}  // namespace qcomp
