#include "qcomp/retrieval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "assets.hpp"
#include "json.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace qcomp {

using nlohmann::json;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::QuestionCentric: return "question-centric";
    case Strategy::Bm25Cards: return "bm25-cards";
    case Strategy::Bm25Abstracts: return "bm25-abstracts";
    case Strategy::FixedChunk: return "fixed-chunk";
    case Strategy::RecursiveChunk: return "recursive-chunk";
  }
  return "question-centric";
}

Strategy strategy_from_string(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw InputError("unknown strategy: " + std::string(name));
}

void RetrievalConfig::validate() const {
  if (top_k == 0) throw InputError("top_k must be positive");
  if (lexical_prefilter_n < top_k) throw InputError("lexical_prefilter_n must be >= top_k");
}

const Document* IndexedCorpus::find(std::string_view doc_id) const {
  for (const auto& d : documents) {
    if (d.id == doc_id) return &d;
  }
  return nullptr;
}

std::size_t IndexedCorpus::stored_records() const {
  switch (strategy) {
    case Strategy::QuestionCentric: return store.size();
    case Strategy::FixedChunk:
    case Strategy::RecursiveChunk: return chunks.size();
    default: return documents.size();
  }
}

std::string abstract_text(const Document& doc) {
  for (const auto& s : doc.sections) {
    if (s.kind == SectionKind::Abstract) return s.text;
  }
  const auto tokens = tokenize_with_offsets(doc.full_text);
  if (tokens.empty()) return doc.full_text;
  const auto last = tokens[std::min<std::size_t>(tokens.size(), 300) - 1];
  return doc.full_text.substr(tokens.front().begin, last.end - tokens.front().begin);
}

namespace {

bool needs_compression(Strategy s) { return s == Strategy::QuestionCentric || s == Strategy::Bm25Cards; }

std::string item_id(const std::string& doc_id, std::string_view family, std::size_t ordinal) {
  return doc_id + "#" + std::string(family) + "#" + std::to_string(ordinal);
}

void check_corpus(const std::vector<Document>& corpus) {
  if (corpus.empty()) throw StateError("cannot index an empty corpus");
}

// Items and BM25 are pure functions of documents, artifacts and options.
void build_lexical_layer(IndexedCorpus& index) {
  index.items.clear();
  index.chunks.clear();
  switch (index.strategy) {
    case Strategy::QuestionCentric:
      for (const auto& a : index.artifacts) {
        std::size_t n = 0;
        for (const auto& q : a.questions.all()) {
          index.items.push_back({item_id(a.doc_id, "question", n++), a.doc_id, ArtifactKind::Question, q.text,
                                 q.section_order});
        }
        n = 0;
        for (const auto& q : a.queries.queries) {
          index.items.push_back(
              {item_id(a.doc_id, "query", n++), a.doc_id, ArtifactKind::Query, q.text, q.section_order});
        }
      }
      break;
    case Strategy::Bm25Cards:
      for (const auto& a : index.artifacts) {
        index.items.push_back({item_id(a.doc_id, "card", 0), a.doc_id, ArtifactKind::Card, a.card.body, 0});
      }
      break;
    case Strategy::Bm25Abstracts:
      for (const auto& d : index.documents) {
        index.items.push_back({item_id(d.id, "abstract", 0), d.id, ArtifactKind::Card, abstract_text(d), 0});
      }
      break;
    case Strategy::FixedChunk:
    case Strategy::RecursiveChunk:
      for (const auto& d : index.documents) {
        for (auto& c : chunk_document(d, index.chunk_config)) {
          index.items.push_back({item_id(d.id, "chunk", c.index), d.id, ArtifactKind::Card, c.text, 0});
          index.chunks.push_back(std::move(c));
        }
      }
      break;
  }
  if (index.items.empty()) throw StateError("index has no retrievable items");
  std::vector<std::pair<std::string, std::string>> texts;
  texts.reserve(index.items.size());
  for (const auto& item : index.items) texts.emplace_back(item.id, item.text);
  index.bm25 = bm25_build(texts, index.options.bm25);
}

std::string join_queries(const QuerySet& qs) {
  std::vector<std::string> texts;
  for (const auto& q : qs.queries) texts.push_back(q.text);
  return detail::join(texts, "\n");
}

void embed_artifacts(IndexedCorpus& index, EmbeddingBackend& backend) {
  for (const auto& a : index.artifacts) {
    try {
      if (index.options.embed_families.contains(ArtifactKind::Card)) {
        const auto text = a.card.body.empty() ? serialize_card(a.card) : a.card.body;
        index.store.add({a.doc_id, ArtifactKind::Card, 0}, embed(text, backend));
      }
      if (index.options.embed_families.contains(ArtifactKind::Query) && !a.queries.queries.empty()) {
        index.store.add({a.doc_id, ArtifactKind::Query, 0}, embed(join_queries(a.queries), backend));
      }
      if (index.options.embed_families.contains(ArtifactKind::Question)) {
        std::size_t n = 0;
        for (const auto& q : a.questions.all()) {
          index.store.add({a.doc_id, ArtifactKind::Question, n++}, embed(q.text, backend));
        }
      }
    } catch (const BackendError& e) {
      throw BackendError("document " + a.doc_id + ": " + e.what(), e.diagnostic());
    } catch (const ContractError& e) {
      throw ContractError("document " + a.doc_id + ": " + e.what());
    }
  }
}

ChunkConfig chunk_config_for(Strategy s, ChunkConfig cfg) {
  cfg.strategy = s == Strategy::RecursiveChunk ? ChunkStrategy::Recursive : ChunkStrategy::FixedSize;
  return cfg;
}

}  // namespace

IndexedCorpus build_index_from_artifacts(const std::vector<Document>& corpus,
                                         std::vector<CompressionArtifacts> artifacts, Strategy strategy,
                                         const IndexBackends& backends, const IndexOptions& options) {
  check_corpus(corpus);
  IndexedCorpus index;
  index.strategy = strategy;
  index.documents = corpus;
  index.options = options;
  index.chunk_config = chunk_config_for(strategy, options.chunk);
  index.chunk_config.validate();
  if (needs_compression(strategy)) {
    std::set<std::string> have;
    for (const auto& a : artifacts) have.insert(a.doc_id);
    for (const auto& d : corpus) {
      if (!have.contains(d.id)) throw MissingArtifactError("no compression artifacts for document " + d.id);
    }
    index.artifacts = std::move(artifacts);
  }
  build_lexical_layer(index);
  if (strategy == Strategy::QuestionCentric) {
    if (!backends.embedding) throw InputError("question-centric indexing needs an embedding backend");
    embed_artifacts(index, *backends.embedding);
  }
  return index;
}

IndexedCorpus build_index(const std::vector<Document>& corpus, Strategy strategy, const IndexBackends& backends,
                          const IndexOptions& options) {
  check_corpus(corpus);
  std::vector<CompressionArtifacts> artifacts;
  if (needs_compression(strategy)) {
    if (!backends.generation || !backends.tagger) {
      throw InputError("compression needs a generation backend and a tagger");
    }
    artifacts = compress_corpus(corpus, *backends.generation, *backends.tagger, options.compression);
  }
  return build_index_from_artifacts(corpus, std::move(artifacts), strategy, backends, options);
}

namespace {

std::string section_text_for(const Document& doc, std::size_t order) {
  for (const auto& s : doc.sections) {
    if (s.order == order) return s.text;
  }
  return doc.full_text;
}

std::vector<RankedResult> rank_documents(const std::map<std::string, double>& best, std::size_t top_k) {
  std::vector<RankedResult> results;
  for (const auto& [doc, score] : best) results.push_back({doc, score, 0});
  std::stable_sort(results.begin(), results.end(),
                   [](const RankedResult& l, const RankedResult& r) { return l.score > r.score; });
  if (results.size() > top_k) results.resize(top_k);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
  return results;
}

}  // namespace

std::vector<RankedResult> single_hop_retrieve(std::string_view query, const IndexedCorpus& index,
                                              const RetrievalConfig& cfg, const PosTagger& tagger,
                                              EmbeddingBackend* embed_backend) {
  if (cfg.top_k == 0) throw InputError("top_k must be positive");
  if (index.items.empty() || index.bm25.size() == 0) throw StateError("index is empty");
  if (cfg.strategy != index.strategy) {
    throw StateError("index was built for " + std::string(to_string(index.strategy)) + ", not " +
                     std::string(to_string(cfg.strategy)));
  }

  std::map<std::string, std::size_t> item_of;
  for (std::size_t i = 0; i < index.items.size(); ++i) item_of[index.items[i].id] = i;

  if (index.strategy != Strategy::QuestionCentric) {
    std::map<std::string, double> best;
    for (const auto& [id, score] : bm25_score(index.bm25, query)) {
      const auto& doc = index.items[item_of.at(id)].doc_id;
      auto [it, inserted] = best.emplace(doc, score);
      if (!inserted) it->second = std::max(it->second, score);
    }
    return rank_documents(best, cfg.top_k);
  }

  if (!embed_backend) throw InputError("question-centric retrieval needs an embedding backend");
  const auto keywords = extract_keywords_by_pos(query, tagger);
  const auto lexical_query = keywords.empty() ? std::string(query) : detail::join(keywords, " ");

  const std::size_t want_docs = std::max(cfg.lexical_prefilter_n, cfg.top_k);
  std::set<std::string> covered;
  std::vector<RerankCandidate> candidates;
  for (const auto& [id, score] : bm25_score(index.bm25, lexical_query)) {
    if (covered.size() >= want_docs) break;
    const auto& item = index.items[item_of.at(id)];
    covered.insert(item.doc_id);
    const auto* doc = index.find(item.doc_id);
    candidates.push_back({item.doc_id, doc ? section_text_for(*doc, item.section_order) : item.text});
  }
  return semantic_rerank_candidates(embed(query, *embed_backend), candidates, *embed_backend, cfg.top_k);
}

std::string default_multihop_template() { return std::string(assets::kMultihopPrompt); }

MultihopConfig::MultihopConfig() : prompt_template(default_multihop_template()) {}

void MultihopConfig::validate() const {
  rerank.validate();
  gen_params.validate();
  if (window_sentences == 0 || window_stride == 0) throw InputError("sentence window and stride must be positive");
}

namespace {

bool is_passage_marker(std::string_view line) {
  line = detail::trim(line);
  if (!line.starts_with("Passage ") || !line.ends_with(":")) return false;
  const auto num = line.substr(8, line.size() - 9);
  return !num.empty() && std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool end = (c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || detail::is_space(text[i + 1]));
    if (end) {
      auto s = detail::trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.emplace_back(s);
      start = i + 1;
    }
  }
  auto tail = detail::trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::vector<Passage> sentence_windows(std::string_view text, std::size_t size, std::size_t stride) {
  const auto sentences = split_sentences(text);
  std::vector<Passage> out;
  for (std::size_t start = 0; start < sentences.size(); start += stride) {
    const std::size_t end = std::min(start + size, sentences.size());
    std::vector<std::string> window(sentences.begin() + static_cast<std::ptrdiff_t>(start),
                                    sentences.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back({out.size(), detail::join(window, " ")});
    if (end == sentences.size()) break;
  }
  return out;
}

}  // namespace

std::vector<Passage> split_passages(std::string_view text, const MultihopConfig& cfg) {
  if (cfg.passage_split == PassageSplit::SentenceWindow) {
    return sentence_windows(text, cfg.window_sentences, cfg.window_stride);
  }
  std::vector<Passage> paragraphs;
  std::string current;
  const auto flush = [&] {
    auto t = detail::trim(current);
    if (!t.empty()) paragraphs.push_back({paragraphs.size(), std::string(t)});
    current.clear();
  };
  for (auto line : detail::split(text, '\n')) {
    if (detail::trim(line).empty()) {
      flush();
      continue;
    }
    if (is_passage_marker(line)) flush();
    current += line;
    current += '\n';
  }
  flush();
  if (paragraphs.size() < 2) return sentence_windows(text, cfg.window_sentences, cfg.window_stride);
  return paragraphs;
}

MultihopAnswer multihop_answer(std::string_view question, std::string_view document_text, const MultihopConfig& cfg,
                               const PosTagger& tagger, GenerationBackend& gen_backend) {
  cfg.validate();
  if (detail::trim(document_text).empty()) throw InputError("multihop document is empty");
  const auto passages = split_passages(document_text, cfg);
  auto filtered = rerank_detailed(question, passages, cfg.rerank, tagger);

  std::vector<std::string> texts;
  for (const auto& p : filtered.passages) texts.push_back(p.text);
  const auto prompt = render_template(cfg.prompt_template,
                                      {{"context", detail::join(texts, "\n\n")}, {"input", std::string(question)}});
  std::string answer;
  try {
    answer = gen_backend.generate(prompt, cfg.gen_params);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("generation backend failed", e.what());
  }
  MultihopAnswer out;
  out.answer = std::string(detail::trim(answer));
  out.empty_context = filtered.passages.empty();
  out.selected = std::move(filtered.passages);
  out.threshold_used = filtered.threshold_used;
  return out;
}

namespace {

json chunk_config_json(const ChunkConfig& c) {
  static constexpr std::string_view kSep[] = {"section", "paragraph", "sentence", "word"};
  json seps = json::array();
  for (auto s : c.recursive_separators) seps.push_back(kSep[static_cast<int>(s)]);
  return {{"size_words", c.size_words}, {"overlap_words", c.overlap_words}, {"recursive_separators", seps}};
}

ChunkConfig chunk_config_from_json(const json& j) {
  ChunkConfig c;
  c.size_words = j.at("size_words").get<std::size_t>();
  c.overlap_words = j.at("overlap_words").get<std::size_t>();
  c.recursive_separators.clear();
  for (const auto& s : j.at("recursive_separators")) {
    const auto name = s.get<std::string>();
    if (name == "section") c.recursive_separators.push_back(SeparatorKind::SectionBreak);
    else if (name == "paragraph") c.recursive_separators.push_back(SeparatorKind::ParagraphBreak);
    else if (name == "sentence") c.recursive_separators.push_back(SeparatorKind::SentenceBreak);
    else c.recursive_separators.push_back(SeparatorKind::WordBreak);
  }
  return c;
}

std::string descriptor_path(const std::string& dir, Strategy s) {
  return (fs::path(dir) / (std::string(to_string(s)) + ".json")).string();
}

}  // namespace

void save_index(const IndexedCorpus& index, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw StorageError("cannot create index directory " + dir);
  const auto name = std::string(to_string(index.strategy));

  json families = json::array();
  for (auto k : index.options.embed_families) families.push_back(to_string(k));
  json descriptor = {{"strategy", name},
                     {"documents", index.documents.size()},
                     {"items", index.items.size()},
                     {"stored_records", index.stored_records()},
                     {"bm25", {{"k1", index.options.bm25.k1}, {"b", index.options.bm25.b}}},
                     {"chunk", chunk_config_json(index.chunk_config)},
                     {"embed_families", families}};

  if (index.strategy == Strategy::QuestionCentric) {
    index.store.save((fs::path(dir) / name).string());
    descriptor["store"] = {{"dim", index.store.dim()}, {"model_id", index.store.model_id()}, {"entries", index.store.size()}};
  }
  if (index.strategy == Strategy::FixedChunk || index.strategy == Strategy::RecursiveChunk) {
    std::ostringstream dump;
    write_chunks_jsonl(dump, index.chunks);
    detail::write_file_atomic((fs::path(dir) / (name + ".chunks.jsonl")).string(), dump.str());
    descriptor["chunks"] = index.chunks.size();
  }
  detail::write_file_atomic(descriptor_path(dir, index.strategy), descriptor.dump(2) + "\n");
}

IndexedCorpus load_index(const std::string& dir, Strategy strategy, const std::vector<Document>& corpus,
                         const std::string& artifacts_dir) {
  const auto path = descriptor_path(dir, strategy);
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing index for strategy " + std::string(to_string(strategy)) + ": " + path);
  json descriptor;
  try {
    descriptor = json::parse(in);
  } catch (const json::exception& e) {
    throw StorageError("corrupt index descriptor " + path + ": " + e.what());
  }
  check_corpus(corpus);

  IndexedCorpus index;
  index.strategy = strategy;
  index.documents = corpus;
  index.options.bm25.k1 = descriptor.at("bm25").at("k1").get<double>();
  index.options.bm25.b = descriptor.at("bm25").at("b").get<double>();
  index.options.chunk = chunk_config_from_json(descriptor.at("chunk"));
  index.options.embed_families.clear();
  for (const auto& f : descriptor.at("embed_families")) {
    index.options.embed_families.insert(artifact_kind_from_string(f.get<std::string>()));
  }
  index.chunk_config = chunk_config_for(strategy, index.options.chunk);
  if (needs_compression(strategy)) index.artifacts = load_artifacts(artifacts_dir);
  build_lexical_layer(index);
  if (strategy == Strategy::QuestionCentric) {
    index.store = VectorStore::load((fs::path(dir) / std::string(to_string(strategy))).string());
  }
  return index;
}

}  // namespace qcomp
