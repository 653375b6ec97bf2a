#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qcomp {

enum class SectionKind { Introduction, Methodology, Discussion, Conclusion, Abstract, Other };

std::string_view to_string(SectionKind kind);
SectionKind section_kind_from_string(std::string_view name);

struct Section {
  SectionKind kind = SectionKind::Other;
  std::string heading;
  std::string text;
  std::size_t order = 0;
};

struct Document {
  std::string id;
  std::string title;
  std::vector<std::string> authors;
  std::string date;
  std::string platform;
  std::optional<std::string> doi;
  std::vector<Section> sections;
  std::string full_text;
};

// One word of a tokenized text, with the byte range it occupies in the
// source string (after punctuation stripping).
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Shared word definition for chunk sizing, BM25 and keyword counting.
/// Splits on whitespace, '-' and ','; strips leading/trailing ASCII
/// punctuation; drops empty tokens. Casing is preserved.
std::vector<std::string> tokenize_words(std::string_view text);
std::vector<Token> tokenize_with_offsets(std::string_view text);

std::string to_lower_ascii(std::string_view s);

/// True when `line` looks like a section heading: optional numbering
/// ("3", "3.1", "2.") followed by a title-cased phrase of at most 8 words
/// with no sentence-final punctuation.
bool is_heading_line(std::string_view line);

/// Lines matching is_heading_line open a new section. Text with no
/// recognized heading yields a single Other section.
std::vector<Section> extract_sections(std::string_view full_text);

/// Throws InputError on empty `raw` or missing "id". Recognized metadata
/// keys: id, title, authors (';'-separated), date, platform, doi.
Document ingest_document(std::string_view raw, const std::map<std::string, std::string>& metadata);

// Corpus JSON Lines: {"id","title","authors":[...],"date","platform","doi","text"}.
// Errors name the 1-based line number. Blank lines are skipped.
std::vector<Document> read_corpus_jsonl(std::istream& in);
void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs);

enum class ChunkStrategy { FixedSize, Recursive };
enum class SeparatorKind { SectionBreak, ParagraphBreak, SentenceBreak, WordBreak };

struct ChunkConfig {
  ChunkStrategy strategy = ChunkStrategy::FixedSize;
  std::size_t size_words = 350;
  std::size_t overlap_words = 0;
  std::vector<SeparatorKind> recursive_separators = {
      SeparatorKind::SectionBreak, SeparatorKind::ParagraphBreak, SeparatorKind::SentenceBreak,
      SeparatorKind::WordBreak};

  // Throws InputError when size_words == 0 or overlap_words >= size_words.
  void validate() const;
};

struct Chunk {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  // Half-open [start_word, end_word) into tokenize_words(full_text).
  std::pair<std::size_t, std::size_t> word_span;
};

std::vector<Chunk> chunk_fixed(const Document& doc, const ChunkConfig& cfg);
std::vector<Chunk> chunk_recursive(const Document& doc, const ChunkConfig& cfg);
// Dispatches on cfg.strategy.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkConfig& cfg);

// Chunk dump JSON Lines: {"doc_id","index","text"}.
void write_chunks_jsonl(std::ostream& out, const std::vector<Chunk>& chunks);

}  // namespace qcomp
