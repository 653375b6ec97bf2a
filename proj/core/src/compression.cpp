#include "qcomp/compression.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "assets.hpp"
#include "csv.hpp"
#include "json.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace qcomp {

using nlohmann::json;

std::vector<GeneratedQuestion> QuestionSet::all() const {
  auto out = technical;
  out.insert(out.end(), conceptual.begin(), conceptual.end());
  return out;
}

void CardLimit::validate() const {
  if (max == 0) throw InputError("card limit must be positive");
}

PromptTemplates PromptTemplates::defaults() {
  return PromptTemplates{std::string(assets::kQuestionTechnicalPrompt), std::string(assets::kQuestionConceptualPrompt),
                         std::string(assets::kQueryPrompt), std::string(assets::kCardPrompt)};
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
  auto t = defaults();
  const auto read = [&](const char* name, std::string& slot) {
    std::ifstream in(fs::path(dir) / name, std::ios::binary);
    if (!in) return;
    std::ostringstream ss;
    ss << in.rdbuf();
    slot = ss.str();
  };
  read("question_technical.txt", t.question_technical);
  read("question_conceptual.txt", t.question_conceptual);
  read("query.txt", t.query);
  read("card.txt", t.card);
  return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

namespace {

// Rough words-per-token ratio used to keep section text inside the context.
std::string clip_to_context(std::string_view text, std::size_t max_context_tokens) {
  const std::size_t max_words = std::max<std::size_t>(1, max_context_tokens * 3 / 4);
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (++words > max_words) return std::string(detail::trim(text.substr(0, i)));
    while (i < text.size() && !detail::is_space(text[i])) ++i;
  }
  return std::string(text);
}

std::string strip_question_marker(std::string_view line) {
  auto t = detail::trim(line);
  if (t.starts_with("\xE2\x80\xA2")) {  // U+2022 bullet
    t = detail::trim(t.substr(3));
  } else if (!t.empty() && (t.front() == '-' || t.front() == '*')) {
    t = detail::trim(t.substr(1));
  }
  std::size_t i = 0;
  while (i < t.size() && t[i] >= '0' && t[i] <= '9') ++i;
  if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) t = detail::trim(t.substr(i + 1));
  for (std::string_view prefix : {"question:", "q:"}) {
    if (t.size() >= prefix.size() && to_lower_ascii(t.substr(0, prefix.size())) == prefix) {
      t = detail::trim(t.substr(prefix.size()));
      break;
    }
  }
  return std::string(t);
}

std::vector<std::string> parse_question_lines(std::string_view output) {
  std::vector<std::string> out;
  for (auto line : detail::split(output, '\n')) {
    auto q = strip_question_marker(line);
    if (!q.empty()) out.push_back(std::move(q));
  }
  return out;
}

bool is_target(SectionKind k) {
  return k == SectionKind::Introduction || k == SectionKind::Methodology || k == SectionKind::Discussion ||
         k == SectionKind::Conclusion;
}

std::string call_backend(GenerationBackend& backend, const std::string& prompt, const GenerationParams& params) {
  try {
    return backend.generate(prompt, params);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("generation backend failed", e.what());
  }
}

// Round-robin over per-section lists, dropping exact duplicates.
std::vector<GeneratedQuestion> interleave(const std::vector<std::vector<GeneratedQuestion>>& per_section,
                                          std::size_t limit) {
  std::vector<GeneratedQuestion> out;
  std::set<std::string> seen;
  for (std::size_t round = 0; out.size() < limit; ++round) {
    bool any = false;
    for (const auto& list : per_section) {
      if (round >= list.size()) continue;
      any = true;
      if (out.size() < limit && seen.insert(list[round].text).second) out.push_back(list[round]);
    }
    if (!any) break;
  }
  return out;
}

}  // namespace

QuestionSet generate_questions(const std::string& doc_id, const std::vector<Section>& sections,
                               GenerationBackend& backend, const GenerationParams& params,
                               const QuestionCounts& counts, const PromptTemplates& templates) {
  if (sections.empty()) throw InputError("no sections to generate questions from");
  if (counts.technical == 0 || counts.conceptual == 0) throw InputError("question counts must be positive");
  params.validate();

  std::vector<const Section*> targets;
  for (const auto& s : sections) {
    if (is_target(s.kind)) targets.push_back(&s);
  }
  if (targets.empty()) {
    for (const auto& s : sections) targets.push_back(&s);
  }

  std::vector<std::vector<GeneratedQuestion>> technical, conceptual;
  for (const auto* s : targets) {
    const std::map<std::string, std::string> base = {
        {"section_kind", std::string(to_string(s->kind))},
        {"section_heading", s->heading},
        {"section_text", clip_to_context(s->text, params.max_context_tokens)}};
    const auto run = [&](const std::string& tmpl, std::size_t count) {
      auto values = base;
      values["count"] = std::to_string(count);
      std::vector<GeneratedQuestion> qs;
      for (auto& text : parse_question_lines(call_backend(backend, render_template(tmpl, values), params))) {
        qs.push_back({std::move(text), s->order});
      }
      return qs;
    };
    technical.push_back(run(templates.question_technical, counts.technical));
    conceptual.push_back(run(templates.question_conceptual, counts.conceptual));
  }

  QuestionSet qs{doc_id, interleave(technical, counts.technical), interleave(conceptual, counts.conceptual)};
  if (qs.empty()) throw EmptyGenerationError("backend produced no parseable questions for " + doc_id);
  return qs;
}

KeywordSet identify_keywords(const QuestionSet& qs, const PosTagger& tagger, std::size_t max_keywords) {
  // Interrogatives and auxiliaries carry no topic; everything else that
  // survives POS filtering is a candidate, ranked by frequency.
  static const std::set<std::string> kQuestionWords = {
      "what", "why", "how",  "which", "who",  "whom", "whose", "when", "where", "is",   "are",  "was",
      "were", "do",   "does", "did",  "can",  "could", "would", "should", "will", "the", "a",   "an",
      "this", "that", "these", "those", "it", "its",  "their", "they", "be",   "been", "has",  "have"};
  std::unordered_map<std::string, std::size_t> freq;
  std::vector<std::string> order;
  for (const auto& q : qs.all()) {
    for (const auto& k : extract_keywords_by_pos(q.text, tagger)) {
      if (k.size() < 3 || kQuestionWords.contains(k)) continue;
      if (std::all_of(k.begin(), k.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
      if (freq[k]++ == 0) order.push_back(k);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& l, const auto& r) { return freq[l] > freq[r]; });
  if (order.size() > max_keywords) order.resize(max_keywords);
  return KeywordSet{qs.doc_id, std::move(order)};
}

namespace {

bool has_control_bytes(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u < 0x20 && c != '\n' && c != '\r' && c != '\t') || u == 0x7F;
  });
}

bool is_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// A short single-token first field ("1", "q1") labels the row.
bool is_row_label(std::string_view s) {
  s = detail::trim(s);
  return !s.empty() && s.size() <= 8 && s.find(' ') == std::string_view::npos;
}

}  // namespace

QuerySet generate_queries(const QuestionSet& qs, const KeywordSet& kw, GenerationBackend& backend,
                          const GenerationParams& params, const PromptTemplates& templates) {
  const auto questions = qs.all();
  if (questions.empty()) throw InputError("query generation needs at least one question");
  params.validate();

  std::string numbered;
  for (std::size_t i = 0; i < questions.size(); ++i) numbered += std::to_string(i + 1) + ". " + questions[i].text + "\n";
  if (!numbered.empty()) numbered.pop_back();
  const auto prompt = render_template(templates.query, {{"questions", numbered}, {"keywords", detail::join(kw.keywords, ", ")}});
  const auto raw = call_backend(backend, prompt, params);

  if (!detail::valid_utf8(raw)) throw FormatError("query output is not valid UTF-8", raw);
  if (has_control_bytes(raw)) throw FormatError("query output contains control bytes", raw);
  const auto rows = detail::csv_parse(raw);
  if (!rows) throw FormatError("query output is not valid CSV", raw);

  QuerySet out{qs.doc_id, {}, {}};
  std::set<std::string> seen;
  for (const auto& row : *rows) {
    if (row.empty()) continue;
    std::size_t first = 0;
    std::optional<std::size_t> number;
    if (row.size() >= 2 && is_row_label(row[0])) {
      first = 1;
      const auto label = detail::trim(row[0]);
      if (is_integer(label)) number = std::stoul(std::string(label));
      const auto lower_last = to_lower_ascii(row.back());
      if (!number && lower_last.find("query") != std::string::npos && row.size() == 2 &&
          detail::trim(row.back()).size() <= 8) {
        continue;  // header row such as "number,query"
      }
    }
    std::string text;
    for (std::size_t i = first; i < row.size(); ++i) {
      if (i > first) text += ",";
      text += row[i];
    }
    text = std::string(detail::trim(text));
    if (text.empty() || !seen.insert(text).second) continue;

    const std::size_t position = number && *number >= 1 && *number <= questions.size() ? *number - 1
                                                                                       : out.queries.size();
    const auto& source = questions[std::min(position, questions.size() - 1)];
    if (text.size() >= source.text.size()) {
      out.warnings.push_back("query \"" + text + "\" is not shorter than its question");
    }
    out.queries.push_back({std::move(text), source.section_order});
  }
  if (out.queries.empty()) throw FormatError("query output contains no rows", raw);
  return out;
}

std::size_t measure(std::string_view text, CardLimitUnit unit) {
  return unit == CardLimitUnit::Words ? tokenize_words(text).size() : detail::utf8_length(text);
}

std::string truncate_to_limit(std::string_view text, const CardLimit& limit) {
  limit.validate();
  if (measure(text, limit.unit) <= limit.max) return std::string(text);
  std::size_t best = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    while (i < text.size() && !detail::is_space(text[i])) ++i;
    if (measure(text.substr(0, i), limit.unit) > limit.max) break;
    best = i;
  }
  return std::string(detail::trim(text.substr(0, best)));
}

namespace {

std::string normalize_heading(std::string_view line) {
  std::string s;
  for (char c : line) {
    if (c != '#' && c != '*' && c != ':') s.push_back(c);
  }
  return to_lower_ascii(detail::trim(s));
}

void parse_card_lists(std::string_view text, std::vector<std::string>& topics, std::vector<std::string>& findings) {
  std::vector<std::string>* target = nullptr;
  for (auto line : detail::split(text, '\n')) {
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto h = normalize_heading(t);
    if (h == "topics" || h == "topic") {
      target = &topics;
      continue;
    }
    if (h == "key findings" || h == "findings" || h == "key finding") {
      target = &findings;
      continue;
    }
    if (!target) continue;
    auto item = strip_question_marker(t);
    if (!item.empty()) target->push_back(std::move(item));
  }
}

std::string render_body(const std::vector<std::string>& topics, const std::vector<std::string>& findings) {
  std::string body = "## Topics\n";
  for (const auto& t : topics) body += "- " + t + "\n";
  body += "\n## Key Findings\n";
  for (const auto& f : findings) body += "- " + f + "\n";
  return body;
}

}  // namespace

PaperCard build_paper_card(const Document& doc, const QuestionSet& qs, const QuerySet& qu,
                           GenerationBackend& backend, const GenerationParams& params, const CardLimit& limit,
                           const PromptTemplates& templates) {
  limit.validate();
  if (doc.id.empty()) throw InputError("document has no id");
  if (qs.empty()) throw InputError("card generation needs questions");

  std::string questions, queries, sections;
  for (const auto& q : qs.all()) questions += "- " + q.text + "\n";
  for (const auto& q : qu.queries) queries += "- " + q.text + "\n";
  for (const auto& s : doc.sections) {
    if (is_target(s.kind) || s.kind == SectionKind::Abstract) sections += s.text + "\n";
  }
  if (sections.empty()) {
    for (const auto& s : doc.sections) sections += s.text + "\n";
  }
  const auto prompt = render_template(
      templates.card,
      {{"questions", questions}, {"queries", queries}, {"sections", clip_to_context(sections, params.max_context_tokens)}});
  const auto raw = call_backend(backend, prompt, params);

  PaperCard card;
  card.doc_id = doc.id;
  card.limit = limit;
  card.metadata = {doc.platform, doc.authors, doc.date, doc.doi.value_or(doc.id)};
  parse_card_lists(raw, card.topics, card.key_findings);
  card.body = truncate_to_limit(render_body(card.topics, card.key_findings), limit);

  const auto bytes = serialize_card(card).size();
  if (bytes > kMaxCardBytes) {
    throw CardOverflowError("card for " + doc.id + " is " + std::to_string(bytes) + " bytes (limit " +
                            std::to_string(kMaxCardBytes) + ")");
  }
  return card;
}

std::string serialize_card(const PaperCard& card) {
  std::string out;
  out += "id: " + card.doc_id + "\n";
  if (card.metadata.id_or_doi != card.doc_id) out += "doi: " + card.metadata.id_or_doi + "\n";
  out += "platform: " + card.metadata.platform + "\n";
  out += "authors: " + detail::join(card.metadata.authors, "; ") + "\n";
  out += "date: " + card.metadata.date + "\n";
  out += "\n";
  out += card.body;
  if (out.back() != '\n') out.push_back('\n');
  return out;
}

PaperCard parse_card(std::string_view markdown, const std::string& doc_id) {
  PaperCard card;
  card.doc_id = doc_id;
  card.metadata.id_or_doi = doc_id;
  const auto blank = markdown.find("\n\n");
  const auto header = blank == std::string_view::npos ? markdown : markdown.substr(0, blank);
  for (auto line : detail::split(header, '\n')) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = detail::trim(line.substr(0, colon));
    const auto value = std::string(detail::trim(line.substr(colon + 1)));
    if (key == "doi") card.metadata.id_or_doi = value;
    else if (key == "platform") card.metadata.platform = value;
    else if (key == "date") card.metadata.date = value;
    else if (key == "authors") {
      for (auto a : detail::split(value, ';')) {
        auto name = detail::trim(a);
        if (!name.empty()) card.metadata.authors.emplace_back(name);
      }
    }
  }
  if (blank != std::string_view::npos) {
    card.body = std::string(detail::trim(markdown.substr(blank + 2)));
    if (!card.body.empty()) card.body.push_back('\n');
  }
  parse_card_lists(card.body, card.topics, card.key_findings);
  return card;
}

CompressionArtifacts compress_document(const Document& doc, GenerationBackend& backend, const PosTagger& tagger,
                                       const CompressionOptions& options) {
  options.limit.validate();
  auto questions = generate_questions(doc.id, doc.sections, backend, options.params, options.counts, options.templates);
  auto keywords = identify_keywords(questions, tagger);
  auto queries = generate_queries(questions, keywords, backend, options.params, options.templates);
  auto card = build_paper_card(doc, questions, queries, backend, options.params, options.limit, options.templates);
  return CompressionArtifacts{doc.id, std::move(questions), std::move(queries), std::move(keywords), std::move(card)};
}

namespace {

[[noreturn]] void rethrow_for_document(const std::string& doc_id) {
  const auto where = "document " + doc_id + ": ";
  try {
    throw;
  } catch (const BackendError& e) {
    throw BackendError(where + e.what(), e.diagnostic());
  } catch (const FormatError& e) {
    throw FormatError(where + e.what(), e.raw_output());
  } catch (const EmptyGenerationError& e) {
    throw EmptyGenerationError(where + e.what());
  } catch (const CardOverflowError& e) {
    throw CardOverflowError(where + e.what());
  } catch (const StorageError& e) {
    throw StorageError(where + e.what());
  } catch (const ContractError& e) {
    throw ContractError(where + e.what());
  } catch (const InputError& e) {
    throw InputError(where + e.what());
  }
}

}  // namespace

std::vector<CompressionArtifacts> compress_corpus(const std::vector<Document>& docs, GenerationBackend& backend,
                                                  const PosTagger& tagger, const CompressionOptions& options) {
  std::vector<CompressionArtifacts> results(docs.size());
  std::vector<std::exception_ptr> errors(docs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        try {
          results[i] = compress_document(docs[i], backend, tagger, options);
        } catch (...) {
          rethrow_for_document(docs[i].id);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(1, docs.size()));
  std::vector<std::jthread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

namespace {

std::mutex& directory_mutex(const std::string& dir) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<std::mutex>> registry;
  std::error_code ec;
  auto key = fs::weakly_canonical(fs::path(dir), ec).string();
  if (ec) key = dir;
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StorageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Manifest persist_artifacts(const std::vector<CompressionArtifacts>& artifacts, const std::string& out_dir) {
  Manifest manifest;
  if (artifacts.empty()) return manifest;

  std::lock_guard lock(directory_mutex(out_dir));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw StorageError("cannot create output directory " + out_dir);

  const auto write = [&](const std::string& name, const std::string& data) {
    detail::write_file_atomic((fs::path(out_dir) / name).string(), data);
    manifest.files.push_back({name, data.size()});
  };

  std::string csv = "doc_id,kind,text\n";
  json sources = json::object();
  for (const auto& a : artifacts) {
    manifest.documents.push_back(a.doc_id);
    write(detail::encode_file_name(a.doc_id) + ".md", serialize_card(a.card));
    const auto row = [&](std::string_view kind, const std::string& text) {
      csv += detail::csv_line({a.doc_id, std::string(kind), text}) + "\n";
    };
    json src = {{"technical", json::array()}, {"conceptual", json::array()}, {"query", json::array()}};
    for (const auto& q : a.questions.technical) {
      row("technical", q.text);
      src["technical"].push_back(q.section_order);
    }
    for (const auto& q : a.questions.conceptual) {
      row("conceptual", q.text);
      src["conceptual"].push_back(q.section_order);
    }
    for (const auto& q : a.queries.queries) {
      row("query", q.text);
      src["query"].push_back(q.section_order);
    }
    for (const auto& k : a.keywords.keywords) row("keyword", k);
    sources[a.doc_id] = std::move(src);
  }
  write(std::string(kArtifactsCsv), csv);
  write(std::string(kSourcesFile), sources.dump(2) + "\n");

  json files = json::array();
  for (const auto& f : manifest.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}});
  const json m = {{"documents", manifest.documents},
                  {"files", files},
                  {"record_families_per_document", manifest.record_families_per_document},
                  {"logical_records", manifest.logical_records()}};
  detail::write_file_atomic((fs::path(out_dir) / kManifestFile).string(), m.dump(2) + "\n");
  return manifest;
}

std::vector<CompressionArtifacts> load_artifacts(const std::string& dir) {
  const auto manifest_path = fs::path(dir) / kManifestFile;
  if (!fs::exists(manifest_path)) throw MissingArtifactError("missing compression artifacts: " + manifest_path.string());
  json manifest, sources;
  try {
    manifest = json::parse(read_file(manifest_path));
    sources = json::parse(read_file(fs::path(dir) / kSourcesFile));
  } catch (const json::exception& e) {
    throw StorageError(std::string("corrupt artifact metadata: ") + e.what());
  }
  const auto rows = detail::csv_parse(read_file(fs::path(dir) / kArtifactsCsv));
  if (!rows) throw StorageError("corrupt " + std::string(kArtifactsCsv));

  std::vector<CompressionArtifacts> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& id : manifest.at("documents")) {
    const auto doc_id = id.get<std::string>();
    slot[doc_id] = out.size();
    CompressionArtifacts a;
    a.doc_id = doc_id;
    a.questions.doc_id = a.queries.doc_id = a.keywords.doc_id = doc_id;
    a.card = parse_card(read_file(fs::path(dir) / (detail::encode_file_name(doc_id) + ".md")), doc_id);
    out.push_back(std::move(a));
  }

  std::map<std::string, std::map<std::string, std::size_t>> seen;
  for (std::size_t r = 1; r < rows->size(); ++r) {
    const auto& row = (*rows)[r];
    if (row.size() != 3) throw StorageError("artifacts.csv row " + std::to_string(r + 1) + " has " +
                                            std::to_string(row.size()) + " fields");
    auto it = slot.find(row[0]);
    if (it == slot.end()) throw StorageError("artifacts.csv references unknown document " + row[0]);
    auto& a = out[it->second];
    const auto& kind = row[1];
    const auto ordinal = seen[row[0]][kind]++;
    const auto section_of = [&](const char* family) -> std::size_t {
      const auto& list = sources.at(row[0]).at(family);
      return ordinal < list.size() ? list[ordinal].get<std::size_t>() : 0;
    };
    if (kind == "technical") a.questions.technical.push_back({row[2], section_of("technical")});
    else if (kind == "conceptual") a.questions.conceptual.push_back({row[2], section_of("conceptual")});
    else if (kind == "query") a.queries.queries.push_back({row[2], section_of("query")});
    else if (kind == "keyword") a.keywords.keywords.push_back(row[2]);
    else throw StorageError("artifacts.csv has unknown kind " + kind);
  }
  for (auto& a : out) a.card.limit = {};
  return out;
}

}  // namespace qcomp
