#include "qcomp/corpus.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace qcomp {

using nlohmann::json;

std::string_view to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::Introduction: return "Introduction";
    case SectionKind::Methodology: return "Methodology";
    case SectionKind::Discussion: return "Discussion";
    case SectionKind::Conclusion: return "Conclusion";
    case SectionKind::Abstract: return "Abstract";
    case SectionKind::Other: return "Other";
  }
  return "Other";
}

SectionKind section_kind_from_string(std::string_view name) {
  for (auto k : {SectionKind::Introduction, SectionKind::Methodology, SectionKind::Discussion,
                 SectionKind::Conclusion, SectionKind::Abstract}) {
    if (to_string(k) == name) return k;
  }
  return SectionKind::Other;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> tokens;
  const auto is_sep = [](char c) { return detail::is_space(c) || c == '-' || c == ','; };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_sep(text[i])) ++i;
    std::size_t b = i;
    while (i < text.size() && !is_sep(text[i])) ++i;
    std::size_t e = i;
    while (b < e && detail::is_punct(text[b])) ++b;
    while (e > b && detail::is_punct(text[e - 1])) --e;
    if (b < e) tokens.push_back(Token{std::string(text.substr(b, e - b)), b, e});
  }
  return tokens;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  for (auto& t : tokenize_with_offsets(text)) words.push_back(std::move(t.text));
  return words;
}

namespace {

// Lowercase words allowed inside a title-cased heading ("Results and Discussion").
constexpr std::array<std::string_view, 16> kHeadingConnectors = {
    "a", "an", "and", "as", "at", "by", "for", "from", "in", "of", "on", "or", "the", "to", "via", "with"};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Drops a leading "3", "3.1", "3.1." numbering prefix followed by whitespace.
std::string_view strip_numbering(std::string_view line) {
  std::size_t i = 0;
  if (i >= line.size() || !is_digit(line[i])) return line;
  while (i < line.size() && (is_digit(line[i]) || line[i] == '.')) ++i;
  if (i < line.size() && detail::is_space(line[i])) return detail::trim(line.substr(i));
  return line;
}

SectionKind classify_heading(std::string_view title) {
  const auto lower = to_lower_ascii(title);
  const auto starts = [&](std::string_view p) { return lower.rfind(p, 0) == 0; };
  if (starts("introduction")) return SectionKind::Introduction;
  if (starts("method") || starts("approach")) return SectionKind::Methodology;
  if (starts("discussion")) return SectionKind::Discussion;
  if (starts("conclusion")) return SectionKind::Conclusion;
  if (starts("abstract")) return SectionKind::Abstract;
  return SectionKind::Other;
}

struct Line {
  std::size_t begin;
  std::size_t end;   // exclusive, before the '\n'
  std::size_t next;  // start of the following line
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back({pos, text.size(), text.size()});
      break;
    }
    lines.push_back({pos, nl, nl + 1});
    pos = nl + 1;
  }
  return lines;
}

// Trims whitespace from [b, e) and returns the resulting range.
std::pair<std::size_t, std::size_t> trim_range(std::string_view text, std::size_t b, std::size_t e) {
  while (b < e && detail::is_space(text[b])) ++b;
  while (e > b && detail::is_space(text[e - 1])) --e;
  return {b, e};
}

}  // namespace

bool is_heading_line(std::string_view line) {
  line = detail::trim(line);
  if (line.empty() || line.size() > 120) return false;
  const auto title = strip_numbering(line);
  if (title.empty()) return false;
  const char last = title.back();
  if (last == '.' || last == '!' || last == '?' || last == ',' || last == ';' || last == ':') return false;
  const auto words = detail::split_whitespace(title);
  if (words.empty() || words.size() > 8) return false;
  if (!is_upper(words.front().front())) return false;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto w = words[i];
    if (is_upper(w.front()) || is_digit(w.front())) continue;
    if (std::find(kHeadingConnectors.begin(), kHeadingConnectors.end(), w) != kHeadingConnectors.end()) {
      continue;
    }
    return false;
  }
  return true;
}

std::vector<Section> extract_sections(std::string_view full_text) {
  struct Heading {
    std::size_t line_begin;
    std::size_t body_begin;
    std::string title;
  };
  std::vector<Heading> headings;
  for (const auto& line : split_lines(full_text)) {
    const auto content = full_text.substr(line.begin, line.end - line.begin);
    if (is_heading_line(content)) {
      headings.push_back({line.begin, line.next, std::string(detail::trim(content))});
    }
  }

  std::vector<Section> sections;
  const auto emit = [&](SectionKind kind, std::string heading, std::size_t b, std::size_t e) {
    auto [tb, te] = trim_range(full_text, b, e);
    if (tb >= te) return;
    sections.push_back(Section{kind, std::move(heading), std::string(full_text.substr(tb, te - tb)),
                               sections.size()});
  };

  const std::size_t first = headings.empty() ? full_text.size() : headings.front().line_begin;
  emit(SectionKind::Other, "", 0, first);
  for (std::size_t i = 0; i < headings.size(); ++i) {
    const std::size_t end = i + 1 < headings.size() ? headings[i + 1].line_begin : full_text.size();
    const auto kind = classify_heading(strip_numbering(headings[i].title));
    emit(kind, headings[i].title, headings[i].body_begin, end);
  }

  if (sections.empty()) {
    auto [tb, te] = trim_range(full_text, 0, full_text.size());
    std::string text = tb < te ? std::string(full_text.substr(tb, te - tb)) : std::string(full_text);
    sections.push_back(Section{SectionKind::Other, "", std::move(text), 0});
  }
  return sections;
}

namespace {

std::string normalize_line_endings(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

}  // namespace

Document ingest_document(std::string_view raw, const std::map<std::string, std::string>& metadata) {
  if (raw.empty()) throw InputError("document text is empty");
  auto id_it = metadata.find("id");
  if (id_it == metadata.end() || id_it->second.empty()) throw InputError("document metadata has no \"id\"");

  Document doc;
  doc.id = id_it->second;
  doc.full_text = normalize_line_endings(raw);
  const auto get = [&](const char* key) -> std::string {
    auto it = metadata.find(key);
    return it == metadata.end() ? std::string() : it->second;
  };
  doc.title = get("title");
  doc.date = get("date");
  doc.platform = get("platform");
  if (auto doi = get("doi"); !doi.empty()) doc.doi = doi;
  for (auto part : detail::split(get("authors"), ';')) {
    auto name = detail::trim(part);
    if (!name.empty()) doc.authors.emplace_back(name);
  }
  doc.sections = extract_sections(doc.full_text);
  return doc;
}

std::vector<Document> read_corpus_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw InputError(where + "expected a JSON object");
    const auto str_field = [&](const char* key) -> std::string {
      if (!obj.contains(key) || obj[key].is_null()) return {};
      if (!obj[key].is_string()) throw InputError(where + "field \"" + key + "\" must be a string");
      return obj[key].get<std::string>();
    };
    std::map<std::string, std::string> meta;
    for (const char* key : {"id", "title", "date", "platform", "doi"}) meta[key] = str_field(key);
    const auto text = str_field("text");
    if (meta["id"].empty()) throw InputError(where + "missing \"id\"");
    if (text.empty()) throw InputError(where + "missing or empty \"text\"");
    if (!seen.insert(meta["id"]).second) throw InputError(where + "duplicate id \"" + meta["id"] + "\"");

    Document doc;
    try {
      doc = ingest_document(text, meta);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (obj.contains("authors") && !obj["authors"].is_null()) {
      if (!obj["authors"].is_array()) throw InputError(where + "field \"authors\" must be an array");
      doc.authors.clear();
      for (const auto& a : obj["authors"]) {
        if (!a.is_string()) throw InputError(where + "authors must be strings");
        doc.authors.push_back(a.get<std::string>());
      }
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw InputError("empty corpus");
  return docs;
}

void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    json obj = {{"id", d.id},         {"title", d.title},       {"authors", d.authors},
                {"date", d.date},     {"platform", d.platform}, {"doi", nullptr},
                {"text", d.full_text}};
    if (d.doi) obj["doi"] = *d.doi;
    out << obj.dump() << '\n';
  }
}

void ChunkConfig::validate() const {
  if (size_words == 0) throw InputError("chunk size must be positive");
  if (overlap_words >= size_words) throw InputError("chunk overlap must be smaller than chunk size");
}

namespace {

Chunk make_chunk(const Document& doc, const std::vector<Token>& tokens, std::size_t index, std::size_t a,
                 std::size_t b) {
  // Carry edge punctuation ("(word", "word.") into the chunk text.
  auto begin = tokens[a].begin;
  auto end = tokens[b - 1].end;
  const auto& t = doc.full_text;
  while (begin > 0 && detail::is_punct(t[begin - 1]) && t[begin - 1] != '-' && t[begin - 1] != ',') --begin;
  while (end < t.size() && detail::is_punct(t[end]) && t[end] != '-') ++end;
  return Chunk{doc.id, index, doc.full_text.substr(begin, end - begin), {a, b}};
}

constexpr int level_of(SeparatorKind s) { return static_cast<int>(s); }

// Strength of the boundary in front of each token, as a SeparatorKind level:
// 0 section, 1 paragraph, 2 sentence, 3 word. Entry 0 is unused.
std::vector<int> gap_levels(std::string_view text, const std::vector<Token>& tokens) {
  std::vector<int> levels(tokens.size(), level_of(SeparatorKind::WordBreak));
  const auto lines = split_lines(text);
  std::size_t line_idx = 0;
  std::size_t prev_line = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    while (line_idx + 1 < lines.size() && lines[line_idx].next <= tokens[i].begin) ++line_idx;
    const bool first_on_line = line_idx != prev_line;
    prev_line = line_idx;
    if (i == 0) continue;

    const auto& line = lines[line_idx];
    if (first_on_line && is_heading_line(text.substr(line.begin, line.end - line.begin))) {
      levels[i] = level_of(SeparatorKind::SectionBreak);
      continue;
    }
    const auto gap = text.substr(tokens[i - 1].end, tokens[i].begin - tokens[i - 1].end);
    bool paragraph = false;
    if (auto nl = gap.find('\n'); nl != std::string_view::npos) {
      for (std::size_t j = nl + 1; j < gap.size() && detail::is_space(gap[j]); ++j) {
        if (gap[j] == '\n') {
          paragraph = true;
          break;
        }
      }
    }
    if (paragraph) {
      levels[i] = level_of(SeparatorKind::ParagraphBreak);
      continue;
    }
    for (std::size_t j = 0; j + 1 < gap.size(); ++j) {
      if ((gap[j] == '.' || gap[j] == '!' || gap[j] == '?') && detail::is_space(gap[j + 1])) {
        levels[i] = level_of(SeparatorKind::SentenceBreak);
        break;
      }
    }
  }
  return levels;
}

class RecursiveSplitter {
 public:
  RecursiveSplitter(std::vector<int> levels, std::vector<SeparatorKind> seps, std::size_t size)
      : levels_(std::move(levels)), seps_(std::move(seps)), size_(size) {}

  void split(std::size_t a, std::size_t b, std::size_t sep_idx) {
    if (b - a <= size_) {
      spans_.emplace_back(a, b);
      return;
    }
    const auto sep = seps_[sep_idx];
    if (sep == SeparatorKind::WordBreak) {
      for (std::size_t s = a; s < b; s += size_) spans_.emplace_back(s, std::min(s + size_, b));
      return;
    }
    std::vector<std::size_t> cuts{a};
    for (std::size_t p = a + 1; p < b; ++p) {
      if (levels_[p] <= level_of(sep)) cuts.push_back(p);
    }
    if (cuts.size() == 1) {
      split(a, b, sep_idx + 1);
      return;
    }
    cuts.push_back(b);

    // Greedily merge adjacent pieces while they fit; oversized pieces go
    // one separator finer.
    std::optional<std::pair<std::size_t, std::size_t>> cur;
    const auto flush = [&] {
      if (cur) spans_.push_back(*cur);
      cur.reset();
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const std::size_t pa = cuts[i], pb = cuts[i + 1];
      if (pb - pa > size_) {
        flush();
        split(pa, pb, sep_idx + 1);
      } else if (cur && pb - cur->first <= size_) {
        cur->second = pb;
      } else {
        flush();
        cur.emplace(pa, pb);
      }
    }
    flush();
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& spans() const { return spans_; }

 private:
  std::vector<int> levels_;
  std::vector<SeparatorKind> seps_;
  std::size_t size_;
  std::vector<std::pair<std::size_t, std::size_t>> spans_;
};

}  // namespace

std::vector<Chunk> chunk_fixed(const Document& doc, const ChunkConfig& cfg) {
  cfg.validate();
  const auto tokens = tokenize_with_offsets(doc.full_text);
  const std::size_t step = cfg.size_words - cfg.overlap_words;
  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < tokens.size(); start += step) {
    const std::size_t end = std::min(start + cfg.size_words, tokens.size());
    chunks.push_back(make_chunk(doc, tokens, chunks.size(), start, end));
    if (end == tokens.size()) break;
  }
  return chunks;
}

std::vector<Chunk> chunk_recursive(const Document& doc, const ChunkConfig& cfg) {
  cfg.validate();
  const auto tokens = tokenize_with_offsets(doc.full_text);
  if (tokens.empty()) return {};

  auto seps = cfg.recursive_separators;
  std::stable_sort(seps.begin(), seps.end(), [](auto l, auto r) { return level_of(l) < level_of(r); });
  seps.erase(std::unique(seps.begin(), seps.end()), seps.end());
  if (seps.empty() || seps.back() != SeparatorKind::WordBreak) seps.push_back(SeparatorKind::WordBreak);

  RecursiveSplitter splitter(gap_levels(doc.full_text, tokens), std::move(seps), cfg.size_words);
  splitter.split(0, tokens.size(), 0);

  std::vector<Chunk> chunks;
  for (const auto& [a, b] : splitter.spans()) chunks.push_back(make_chunk(doc, tokens, chunks.size(), a, b));
  return chunks;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkConfig& cfg) {
  return cfg.strategy == ChunkStrategy::FixedSize ? chunk_fixed(doc, cfg) : chunk_recursive(doc, cfg);
}

void write_chunks_jsonl(std::ostream& out, const std::vector<Chunk>& chunks) {
  for (const auto& c : chunks) {
    out << json{{"doc_id", c.doc_id}, {"index", c.index}, {"text", c.text}}.dump() << '\n';
  }
}

}  // namespace qcomp
