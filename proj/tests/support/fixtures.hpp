#pragma once

// Synthetic corpora and scratch directories shared by the unit and
// acceptance suites.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qcomp/corpus.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("qcomp-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

// Lowercase pseudo-words built from syllables; never repeats within one
// generator.
class WordMint {
 public:
  explicit WordMint(unsigned seed) : rng_(seed) {}

  std::string fresh() {
    static const char* kSyllables[] = {"ka", "lo", "mi", "ra", "te", "zu", "vo", "ne", "shi", "pa",
                                       "qu", "dor", "lin", "vek", "sol", "tar", "bri", "gon", "hex", "yam"};
    std::uniform_int_distribution<int> pick(0, 19);
    for (;;) {
      std::string w;
      for (int i = 0; i < 3; ++i) w += kSyllables[pick(rng_)];
      if (used_.insert(w).second) return w;
    }
  }

  std::mt19937& rng() { return rng_; }

 private:
  std::mt19937 rng_;
  std::set<std::string> used_;
};

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {"model", "results", "approach", "improves", "data",
                                                 "method", "shows", "system", "task", "training"};
  return words;
}

// One sentence of `n` words mixing the document's private vocabulary with
// shared filler.
inline std::string sentence(WordMint& mint, const std::vector<std::string>& vocab, std::size_t n) {
  std::uniform_int_distribution<std::size_t> v(0, vocab.size() - 1);
  std::uniform_int_distribution<std::size_t> f(0, filler_words().size() - 1);
  std::string s = "The";
  for (std::size_t i = 1; i < n; ++i) {
    s += ' ';
    s += (i % 3 == 0) ? filler_words()[f(mint.rng())] : vocab[v(mint.rng())];
  }
  return s + ".";
}

inline qcomp::Document synthetic_document(WordMint& mint, const std::string& id, std::size_t sentences_per_section,
                                          std::size_t words_per_sentence = 12) {
  std::vector<std::string> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back(mint.fresh());
  static const char* kHeadings[] = {"Abstract", "1 Introduction", "2 Methodology", "3 Discussion", "4 Conclusion"};
  std::string text;
  for (const char* heading : kHeadings) {
    if (!text.empty()) text += "\n\n";
    text += heading;
    text += "\n";
    for (std::size_t s = 0; s < sentences_per_section; ++s) {
      if (s > 0) text += (s % 6 == 0) ? "\n\n" : " ";
      text += sentence(mint, vocab, words_per_sentence);
    }
  }
  std::map<std::string, std::string> meta = {{"id", id},
                                             {"title", "Synthetic study " + id},
                                             {"date", "2024-05-01"},
                                             {"platform", "arXiv"}};
  auto doc = qcomp::ingest_document(text, meta);
  doc.authors = {"Ada Lovelace", "Alan Turing"};
  return doc;
}

// Twenty-ish short documents with disjoint private vocabularies.
inline std::vector<qcomp::Document> planted_corpus(std::size_t n, unsigned seed = 7) {
  WordMint mint(seed);
  std::vector<qcomp::Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(synthetic_document(mint, "doc" + std::to_string(i), 4));
  return docs;
}

// Long documents: 5 sections x `sentences` sentences x 12 words each.
inline std::vector<qcomp::Document> long_corpus(std::size_t n, std::size_t sentences, unsigned seed = 11) {
  WordMint mint(seed);
  std::vector<qcomp::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(synthetic_document(mint, "long" + std::to_string(i), sentences + i % 5));
  }
  return docs;
}

}  // namespace fixtures
