#include "qcomp/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "assets.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace qcomp {

std::string_view to_string(PosTag tag) {
  static constexpr std::string_view kNames[] = {"ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET",
                                                "INTJ", "NOUN", "NUM",   "PART",  "PRON",  "PROPN",
                                                "PUNCT", "SCONJ", "SYM", "VERB",  "X"};
  return kNames[static_cast<int>(tag)];
}

namespace {

std::vector<std::string> parse_lexicon(std::string_view text) {
  std::vector<std::string> words;
  for (auto line : detail::split(text, '\n')) {
    auto w = detail::trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.push_back(to_lower_ascii(w));
  }
  return words;
}

}  // namespace

const std::vector<std::string>& default_adp_lexicon() {
  static const auto words = parse_lexicon(assets::kAdpLexicon);
  return words;
}

const std::vector<std::string>& default_cconj_lexicon() {
  static const auto words = parse_lexicon(assets::kCconjLexicon);
  return words;
}

LexiconTagger::LexiconTagger()
    : adp_(default_adp_lexicon().begin(), default_adp_lexicon().end()),
      cconj_(default_cconj_lexicon().begin(), default_cconj_lexicon().end()) {}

LexiconTagger::LexiconTagger(std::set<std::string> adp, std::set<std::string> cconj)
    : adp_(std::move(adp)), cconj_(std::move(cconj)) {}

std::set<std::string> read_lexicon_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read lexicon file " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto words = parse_lexicon(text);
  return {words.begin(), words.end()};
}

LexiconTagger LexiconTagger::from_files(const std::string& adp_path, const std::string& cconj_path) {
  return LexiconTagger(read_lexicon_file(adp_path), read_lexicon_file(cconj_path));
}

PosTag LexiconTagger::tag(std::span<const std::string> tokens, std::size_t i) const {
  const auto word = to_lower_ascii(tokens[i]);
  if (cconj_.contains(word)) return PosTag::CCONJ;
  if (adp_.contains(word)) return PosTag::ADP;
  return PosTag::NOUN;
}

std::vector<std::string> extract_keywords_by_pos(std::string_view query, const PosTagger& tagger) {
  const auto tokens = tokenize_words(query);
  std::vector<std::string> keywords;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto tag = tagger.tag(tokens, i);
    if (tag == PosTag::ADP || tag == PosTag::CCONJ) continue;
    auto word = to_lower_ascii(tokens[i]);
    if (seen.insert(word).second) keywords.push_back(std::move(word));
  }
  return keywords;
}

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw InputError("BM25 k1 must be non-negative");
  if (!(b >= 0.0 && b <= 1.0)) throw InputError("BM25 b must lie in [0, 1]");
}

double Bm25Index::idf(const std::string& term) const {
  const auto it = document_frequencies.find(term);
  const double df = it == document_frequencies.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(doc_ids.size());
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

Bm25Index bm25_build(const std::vector<std::pair<std::string, std::string>>& texts, const Bm25Params& params) {
  params.validate();
  if (texts.empty()) throw InputError("BM25 index needs at least one text");
  Bm25Index index;
  index.params = params;
  std::unordered_set<std::string> ids;
  std::size_t total = 0;
  for (const auto& [id, text] : texts) {
    if (!ids.insert(id).second) throw InputError("duplicate id in BM25 input: " + id);
    std::unordered_map<std::string, std::size_t> tf;
    std::size_t len = 0;
    for (const auto& w : tokenize_words(text)) {
      ++tf[to_lower_ascii(w)];
      ++len;
    }
    for (const auto& [term, _] : tf) ++index.document_frequencies[term];
    index.doc_ids.push_back(id);
    index.doc_lengths.push_back(len);
    index.term_frequencies.push_back(std::move(tf));
    total += len;
  }
  index.avg_doc_length = static_cast<double>(total) / static_cast<double>(texts.size());
  return index;
}

std::vector<std::pair<std::string, double>> bm25_score(const Bm25Index& index, std::string_view query) {
  if (index.size() == 0) throw StateError("BM25 index is empty");
  std::vector<std::string> terms;
  for (const auto& w : tokenize_words(query)) terms.push_back(to_lower_ascii(w));

  std::vector<double> idfs;
  idfs.reserve(terms.size());
  for (const auto& t : terms) idfs.push_back(index.idf(t));

  const double k1 = index.params.k1;
  const double b = index.params.b;
  // An all-empty collection has avg length 0; every tf is 0 then, so the
  // normalizer is never used.
  const double avg = index.avg_doc_length > 0.0 ? index.avg_doc_length : 1.0;

  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(index.size());
  for (std::size_t d = 0; d < index.size(); ++d) {
    const auto& tf_map = index.term_frequencies[d];
    const double norm = k1 * (1.0 - b + b * static_cast<double>(index.doc_lengths[d]) / avg);
    double score = 0.0;
    for (std::size_t q = 0; q < terms.size(); ++q) {
      const auto it = tf_map.find(terms[q]);
      if (it == tf_map.end()) continue;
      const double tf = static_cast<double>(it->second);
      score += idfs[q] * tf * (k1 + 1.0) / (tf + norm);
    }
    scores.emplace_back(index.doc_ids[d], score);
  }
  std::sort(scores.begin(), scores.end(), [](const auto& l, const auto& r) {
    if (l.second != r.second) return l.second > r.second;
    return l.first < r.first;
  });
  return scores;
}

}  // namespace qcomp
