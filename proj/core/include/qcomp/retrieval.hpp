#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/backend.hpp"
#include "qcomp/compression.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/lexical.hpp"
#include "qcomp/reranker.hpp"
#include "qcomp/semantic.hpp"

namespace qcomp {

enum class Strategy { QuestionCentric, Bm25Cards, Bm25Abstracts, FixedChunk, RecursiveChunk };

inline constexpr Strategy kAllStrategies[] = {Strategy::QuestionCentric, Strategy::Bm25Cards, Strategy::Bm25Abstracts,
                                              Strategy::FixedChunk, Strategy::RecursiveChunk};

// "question-centric", "bm25-cards", "bm25-abstracts", "fixed-chunk", "recursive-chunk".
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);  // throws InputError

struct RetrievalConfig {
  std::size_t top_k = 3;
  std::size_t lexical_prefilter_n = 10;
  Strategy strategy = Strategy::QuestionCentric;
  void validate() const;
};

// A retrievable text unit: a question or query (question-centric), a card,
// an abstract or a chunk (baselines).
struct LexicalItem {
  std::string id;
  std::string doc_id;
  ArtifactKind kind = ArtifactKind::Question;
  std::string text;
  std::size_t section_order = 0;
};

struct IndexOptions {
  CompressionOptions compression;
  ChunkConfig chunk;
  Bm25Params bm25;
  std::set<ArtifactKind> embed_families = {ArtifactKind::Card, ArtifactKind::Query};
};

struct IndexBackends {
  GenerationBackend* generation = nullptr;
  EmbeddingBackend* embedding = nullptr;
  const PosTagger* tagger = nullptr;
};

// Read-only once built.
struct IndexedCorpus {
  Strategy strategy = Strategy::QuestionCentric;
  std::vector<Document> documents;
  std::vector<CompressionArtifacts> artifacts;  // question-centric and bm25-cards
  std::vector<LexicalItem> items;
  Bm25Index bm25;
  VectorStore store;        // question-centric only
  std::vector<Chunk> chunks;  // chunk strategies only
  ChunkConfig chunk_config;
  IndexOptions options;

  const Document* find(std::string_view doc_id) const;
  bool contains(std::string_view doc_id) const { return find(doc_id) != nullptr; }
  // Logical stored records: embedding entries for question-centric, chunks
  // for chunk strategies, one per document otherwise.
  std::size_t stored_records() const;
};

/// Compresses (question-centric, bm25-cards) or chunks (chunk strategies)
/// the corpus and builds the lexical/semantic indexes. Throws StateError on
/// an empty corpus; backend errors carry the failing doc id.
IndexedCorpus build_index(const std::vector<Document>& corpus, Strategy strategy, const IndexBackends& backends,
                          const IndexOptions& options = {});

/// As build_index, reusing artifacts produced by an earlier compression run.
IndexedCorpus build_index_from_artifacts(const std::vector<Document>& corpus,
                                         std::vector<CompressionArtifacts> artifacts, Strategy strategy,
                                         const IndexBackends& backends, const IndexOptions& options = {});

std::string abstract_text(const Document& doc);

/// Single-hop retrieval. Question-centric: BM25 over stored questions and
/// queries, candidates taken in lexical order until lexical_prefilter_n
/// distinct documents are covered, then reranked by cosine between the
/// query and each candidate's source section. Baselines: BM25 with the
/// document scored by its best item.
std::vector<RankedResult> single_hop_retrieve(std::string_view query, const IndexedCorpus& index,
                                              const RetrievalConfig& cfg, const PosTagger& tagger,
                                              EmbeddingBackend* embed_backend);

enum class PassageSplit { Paragraph, SentenceWindow };

struct MultihopConfig {
  RerankConfig rerank;
  GenerationParams gen_params;
  std::string prompt_template;  // {context} {input}; defaults to the LongBench multi-doc QA prompt
  PassageSplit passage_split = PassageSplit::Paragraph;
  std::size_t window_sentences = 5;
  std::size_t window_stride = 5;

  MultihopConfig();
  void validate() const;
};

std::string default_multihop_template();

/// Paragraph: blank-line (or "Passage N:") delimited blocks, falling back to
/// sentence windows when the text has fewer than two paragraphs.
std::vector<Passage> split_passages(std::string_view text, const MultihopConfig& cfg);

struct MultihopAnswer {
  std::string answer;
  std::vector<Passage> selected;
  std::size_t threshold_used = 0;
  bool empty_context = false;
};

MultihopAnswer multihop_answer(std::string_view question, std::string_view document_text, const MultihopConfig& cfg,
                               const PosTagger& tagger, GenerationBackend& gen_backend);

// On-disk index layout under `dir`: <strategy>.json descriptor, plus
// question-centric.vec/.keys.json or <strategy>.chunks.jsonl.
void save_index(const IndexedCorpus& index, const std::string& dir);

/// Rebuilds an index from its descriptor, the ingested corpus and (for
/// question-centric/bm25-cards) the compression artifacts. Throws
/// MissingArtifactError when any of them is absent.
IndexedCorpus load_index(const std::string& dir, Strategy strategy, const std::vector<Document>& corpus,
                         const std::string& artifacts_dir);

}  // namespace qcomp
