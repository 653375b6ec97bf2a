#include "qcomp/backend.hpp"

#include <algorithm>
#include <cmath>

#include "httplib.h"
#include "json.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"
#include "qcomp/lexical.hpp"
#include "text_util.hpp"

namespace qcomp {

using nlohmann::json;

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 1.0)) throw InputError("temperature must lie in [0, 1]");
  if (max_context_tokens == 0) throw InputError("max_context_tokens must be positive");
  if (max_output_tokens == 0) throw InputError("max_output_tokens must be positive");
}

DeterministicStub::DeterministicStub() : DeterministicStub(extractive_stub_response) {}

DeterministicStub::DeterministicStub(Responder responder, std::string id)
    : responder_(std::move(responder)), id_(std::move(id)) {}

std::string DeterministicStub::generate(std::string_view prompt, const GenerationParams& params) {
  return responder_(prompt, params);
}

namespace {

std::string_view payload_of(std::string_view prompt) {
  const auto pos = prompt.rfind("\n---\n");
  if (pos != std::string_view::npos) return prompt.substr(pos + 5);
  if (prompt.rfind("---\n", 0) == 0) return prompt.substr(4);
  return prompt;
}

// Lines of the block introduced by a "<header>:" line, up to the next header.
std::vector<std::string> block_lines(std::string_view payload, std::string_view header) {
  std::vector<std::string> out;
  bool inside = false;
  for (auto line : detail::split(payload, '\n')) {
    const auto t = detail::trim(line);
    const bool is_header = !t.empty() && t.back() == ':' && t.find(' ') == std::string_view::npos;
    if (is_header) {
      inside = t.substr(0, t.size() - 1) == header;
      continue;
    }
    if (inside && !t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string strip_item_marker(std::string_view line) {
  line = detail::trim(line);
  if (!line.empty() && (line.front() == '-' || line.front() == '*')) return std::string(detail::trim(line.substr(1)));
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return std::string(detail::trim(line.substr(i + 1)));
  return std::string(line);
}

std::vector<std::string> sentences_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    cur.push_back(detail::is_space(c) ? ' ' : c);
    const bool end = (c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || detail::is_space(text[i + 1]));
    if (end || i + 1 == text.size()) {
      auto t = detail::trim(cur);
      if (!t.empty()) out.emplace_back(t);
      cur.clear();
    }
  }
  return out;
}

std::string first_words(std::string_view sentence, std::size_t n) {
  auto words = tokenize_words(sentence);
  if (words.size() > n) words.resize(n);
  return detail::join(words, " ");
}

// Condenses a question into a short keyword query.
std::string condense(std::string_view question) {
  static const LexiconTagger tagger;
  static const std::vector<std::string> kDrop = {"what", "why",  "how",  "which", "who", "when", "where", "does",
                                                 "do",   "did",  "is",   "are",   "the", "a",    "an",    "paper",
                                                 "work", "report", "about", "matter"};
  std::vector<std::string> kept;
  for (const auto& k : extract_keywords_by_pos(question, tagger)) {
    if (std::find(kDrop.begin(), kDrop.end(), k) == kDrop.end()) kept.push_back(k);
    if (kept.size() == 8) break;
  }
  return kept.empty() ? std::string(question) : detail::join(kept, " ");
}

std::size_t requested_count(std::string_view prompt, std::size_t fallback) {
  const auto pos = prompt.find("Write ");
  if (pos == std::string_view::npos) return fallback;
  std::size_t i = pos + 6, n = 0;
  bool any = false;
  while (i < prompt.size() && prompt[i] >= '0' && prompt[i] <= '9') {
    n = n * 10 + static_cast<std::size_t>(prompt[i++] - '0');
    any = true;
  }
  return any && n > 0 ? n : fallback;
}

}  // namespace

std::string extractive_stub_response(std::string_view prompt, const GenerationParams&) {
  const auto payload = payload_of(prompt);
  std::string out;

  if (prompt.find("KEY FINDINGS:") != std::string_view::npos) {
    auto topics = block_lines(payload, "Queries");
    if (topics.empty()) topics = block_lines(payload, "Questions");
    std::string sections;
    for (const auto& l : block_lines(payload, "Sections")) sections += l + "\n";
    out += "TOPICS:\n";
    for (std::size_t i = 0; i < topics.size() && i < 3; ++i) out += "- " + strip_item_marker(topics[i]) + "\n";
    out += "KEY FINDINGS:\n";
    const auto sents = sentences_of(sections);
    for (std::size_t i = 0; i < sents.size() && i < 3; ++i) out += "- " + strip_item_marker(sents[i]) + "\n";
    return out;
  }

  // Multihop QA: the first sentence of the first given passage.
  if (const auto q = prompt.rfind("\nQuestion:"); q != std::string_view::npos && prompt.find("given passages") != std::string_view::npos) {
    auto context = prompt.substr(0, q);
    constexpr std::string_view kIntro = "The following are given passages.";
    if (const auto start = context.find(kIntro); start != std::string_view::npos) {
      context = context.substr(start + kIntro.size());
    }
    for (auto s : sentences_of(context)) {
      if (s.rfind("Answer the question", 0) == 0) break;
      if (const auto colon = s.find(':'); s.rfind("Passage ", 0) == 0 && colon != std::string::npos) {
        s = std::string(detail::trim(std::string_view(s).substr(colon + 1)));
      }
      if (!s.empty()) return s;
    }
    return out;
  }

  if (prompt.find("CSV") != std::string_view::npos) {
    std::size_t n = 0;
    for (const auto& line : block_lines(payload, "Questions")) {
      out += std::to_string(++n) + "," + condense(strip_item_marker(line)) + "\n";
    }
    return out;
  }

  const bool conceptual = prompt.find("conceptual") != std::string_view::npos;
  const auto want = requested_count(prompt, 3);
  std::size_t made = 0;
  for (const auto& s : sentences_of(payload)) {
    if (made == want) break;
    if (tokenize_words(s).size() < 3) continue;
    const auto words = first_words(s, 10);
    out += conceptual ? "Why does " + words + " matter?\n" : "What does the work report about " + words + "?\n";
    ++made;
  }
  return out;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("backend URL needs a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw InputError("only http:// backend URLs are supported: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const HttpEndpoint& ep, const json& body) {
  const auto parsed = parse_url(ep.url);
  httplib::Client client(parsed.origin);
  const auto secs = static_cast<time_t>(ep.timeout_seconds);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!ep.token.empty()) headers.emplace("Authorization", "Bearer " + ep.token);
  auto res = client.Post(parsed.path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("backend unreachable: " + ep.url, httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("backend returned HTTP " + std::to_string(res->status), res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendError("backend returned invalid JSON", e.what());
  }
}

}  // namespace

HttpGenerationBackend::HttpGenerationBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

std::string HttpGenerationBackend::generate(std::string_view prompt, const GenerationParams& params) {
  const json req = {{"prompt", prompt}, {"temperature", params.temperature}, {"max_tokens", params.max_output_tokens}};
  const auto res = post_json(endpoint_, req);
  if (!res.is_object() || !res.contains("text") || !res["text"].is_string()) {
    throw BackendError("generation response has no \"text\" field", res.dump());
  }
  return res["text"].get<std::string>();
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  parse_url(endpoint_.url);
}

std::vector<float> HttpEmbeddingBackend::compute(std::string_view text) {
  const auto res = post_json(endpoint_, json{{"text", text}});
  if (!res.is_object() || !res.contains("embedding") || !res["embedding"].is_array()) {
    throw BackendError("embedding response has no \"embedding\" array", res.dump());
  }
  std::vector<float> values;
  for (const auto& v : res["embedding"]) {
    if (!v.is_number()) throw BackendError("embedding contains a non-number", res.dump());
    values.push_back(v.get<float>());
  }
  std::lock_guard lock(mutex_);
  if (dim_ == 0) dim_ = values.size();
  if (res.contains("model") && res["model"].is_string()) model_ = res["model"].get<std::string>();
  return values;
}

std::size_t HttpEmbeddingBackend::dimension() const {
  std::lock_guard lock(mutex_);
  return dim_;
}

std::string HttpEmbeddingBackend::model_id() const {
  std::lock_guard lock(mutex_);
  return model_.empty() ? "http:" + endpoint_.url : model_;
}

BoundedGeneration::BoundedGeneration(GenerationBackend& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(std::max<std::ptrdiff_t>(1, max_in_flight)) {}

std::string BoundedGeneration::generate(std::string_view prompt, const GenerationParams& params) {
  slots_.acquire();
  try {
    auto out = inner_.generate(prompt, params);
    slots_.release();
    return out;
  } catch (...) {
    slots_.release();
    throw;
  }
}

BoundedEmbedding::BoundedEmbedding(EmbeddingBackend& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(std::max<std::ptrdiff_t>(1, max_in_flight)) {}

std::vector<float> BoundedEmbedding::compute(std::string_view text) {
  slots_.acquire();
  try {
    auto out = inner_.compute(text);
    slots_.release();
    return out;
  } catch (...) {
    slots_.release();
    throw;
  }
}

}  // namespace qcomp
