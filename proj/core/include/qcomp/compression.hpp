#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/backend.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/lexical.hpp"

namespace qcomp {

// A generated question and the Section::order it was generated from.
struct GeneratedQuestion {
  std::string text;
  std::size_t section_order = 0;

  friend bool operator==(const GeneratedQuestion&, const GeneratedQuestion&) = default;
};

struct QuestionSet {
  std::string doc_id;
  std::vector<GeneratedQuestion> technical;
  std::vector<GeneratedQuestion> conceptual;

  // technical followed by conceptual; the numbering used in query prompts.
  std::vector<GeneratedQuestion> all() const;
  bool empty() const { return technical.empty() && conceptual.empty(); }
};

struct QuestionCounts {
  std::size_t technical = 3;
  std::size_t conceptual = 2;
};

struct GeneratedQuery {
  std::string text;
  std::size_t section_order = 0;

  friend bool operator==(const GeneratedQuery&, const GeneratedQuery&) = default;
};

struct QuerySet {
  std::string doc_id;
  std::vector<GeneratedQuery> queries;
  // Soft-check findings (e.g. a query not shorter than its question).
  std::vector<std::string> warnings;
};

struct KeywordSet {
  std::string doc_id;
  std::vector<std::string> keywords;  // lowercase, deduplicated
};

enum class CardLimitUnit { Words, Characters };

struct CardLimit {
  CardLimitUnit unit = CardLimitUnit::Words;
  std::size_t max = 300;
  void validate() const;
};

inline constexpr std::size_t kMaxCardBytes = 5120;

struct CardMetadata {
  std::string platform;
  std::vector<std::string> authors;
  std::string date;
  std::string id_or_doi;
};

struct PaperCard {
  std::string doc_id;
  std::vector<std::string> topics;
  std::vector<std::string> key_findings;
  CardMetadata metadata;
  std::string body;
  CardLimit limit;
};

struct CompressionArtifacts {
  std::string doc_id;
  QuestionSet questions;
  QuerySet queries;
  KeywordSet keywords;
  PaperCard card;
};

// Prompt texts with {placeholder} slots. Defaults mirror the files under
// core/assets/prompts/.
struct PromptTemplates {
  std::string question_technical;  // {section_kind} {section_text} {count}
  std::string question_conceptual;
  std::string query;  // {questions} {keywords}
  std::string card;   // {questions} {queries} {sections}

  static PromptTemplates defaults();
  // Files question_technical.txt, question_conceptual.txt, query.txt and
  // card.txt; any missing file keeps its default.
  static PromptTemplates load_dir(const std::string& dir);
};

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// One prompt per target section (Introduction, Methodology, Discussion,
/// Conclusion; all sections when none of those exist) and per question
/// kind. Output lines become questions, merged round-robin across sections,
/// deduplicated, then truncated to `counts` per kind.
QuestionSet generate_questions(const std::string& doc_id, const std::vector<Section>& sections,
                               GenerationBackend& backend, const GenerationParams& params,
                               const QuestionCounts& counts,
                               const PromptTemplates& templates = PromptTemplates::defaults());

KeywordSet identify_keywords(const QuestionSet& qs, const PosTagger& tagger, std::size_t max_keywords = 10);

/// Parses CSV rows "n,query" (or bare "query") from the backend. Throws
/// FormatError on invalid UTF-8, control bytes, broken quoting or no rows.
QuerySet generate_queries(const QuestionSet& qs, const KeywordSet& kw, GenerationBackend& backend,
                          const GenerationParams& params,
                          const PromptTemplates& templates = PromptTemplates::defaults());

/// Measured length of `text` in the limit's unit (tokenize_words count or
/// UTF-8 code points).
std::size_t measure(std::string_view text, CardLimitUnit unit);

/// Longest prefix ending on a whitespace boundary that fits the limit.
std::string truncate_to_limit(std::string_view text, const CardLimit& limit);

PaperCard build_paper_card(const Document& doc, const QuestionSet& qs, const QuerySet& qu,
                           GenerationBackend& backend, const GenerationParams& params, const CardLimit& limit,
                           const PromptTemplates& templates = PromptTemplates::defaults());

// Markdown card file: metadata header, blank line, body.
std::string serialize_card(const PaperCard& card);
PaperCard parse_card(std::string_view markdown, const std::string& doc_id);

struct CompressionOptions {
  GenerationParams params;
  QuestionCounts counts;
  CardLimit limit;
  PromptTemplates templates = PromptTemplates::defaults();
  std::size_t jobs = 1;
};

CompressionArtifacts compress_document(const Document& doc, GenerationBackend& backend, const PosTagger& tagger,
                                       const CompressionOptions& options);

/// Compresses documents concurrently (options.jobs workers); results are in
/// corpus order. Errors are rethrown with the failing doc id attached.
std::vector<CompressionArtifacts> compress_corpus(const std::vector<Document>& docs, GenerationBackend& backend,
                                                  const PosTagger& tagger, const CompressionOptions& options);

struct ManifestFile {
  std::string path;  // relative to the output directory
  std::size_t bytes = 0;
};

struct Manifest {
  std::vector<std::string> documents;
  std::vector<ManifestFile> files;
  // Logical index-bearing record families per document: card and query set.
  std::size_t record_families_per_document = 2;

  std::size_t logical_records() const { return documents.size() * record_families_per_document; }
  bool empty() const { return documents.empty(); }
};

inline constexpr std::string_view kArtifactsCsv = "artifacts.csv";
inline constexpr std::string_view kSourcesFile = "sources.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

/// Writes <doc_id>.md cards, artifacts.csv (doc_id,kind,text), sources.json
/// (question/query -> section order) and manifest.json. Writes to one
/// directory are serialized. Throws StorageError.
Manifest persist_artifacts(const std::vector<CompressionArtifacts>& artifacts, const std::string& out_dir);

/// Reads back what persist_artifacts wrote. Throws MissingArtifactError when
/// the manifest is absent.
std::vector<CompressionArtifacts> load_artifacts(const std::string& dir);

}  // namespace qcomp
