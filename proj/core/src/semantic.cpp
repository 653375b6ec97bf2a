#include "qcomp/semantic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "json.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace qcomp {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

double norm(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

HashStubEmbedding::HashStubEmbedding(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
}

std::string HashStubEmbedding::model_id() const { return "hash-stub-" + std::to_string(dim_); }

std::vector<float> HashStubEmbedding::compute(std::string_view text) {
  std::vector<double> acc(dim_, 0.0);
  auto words = tokenize_words(text);
  if (words.empty()) words.emplace_back(text);
  for (const auto& w : words) acc[fnv1a(to_lower_ascii(w)) % dim_] += 1.0;
  double n = 0.0;
  for (double x : acc) n += x * x;
  n = std::sqrt(n);
  std::vector<float> out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / n);
  return out;
}

Embedding embed(std::string_view text, EmbeddingBackend& backend) {
  if (text.empty()) throw InputError("cannot embed empty text");
  std::vector<float> values;
  try {
    values = backend.compute(text);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("embedding backend failed", e.what());
  }
  const auto dim = backend.dimension();
  if (values.size() != dim) {
    throw ContractError("embedding backend returned " + std::to_string(values.size()) +
                        " values but declares dimension " + std::to_string(dim));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw ContractError("embedding backend returned a non-finite value");
  }
  return Embedding{std::move(values), dim, backend.model_id()};
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) throw InputError("cosine: dimension mismatch");
  const double na = norm(a.values), nb = norm(b.values);
  if (na == 0.0 || nb == 0.0) throw InputError("cosine: zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += static_cast<double>(a.values[i]) * b.values[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Card: return "card";
    case ArtifactKind::Query: return "query";
    case ArtifactKind::Question: return "question";
  }
  return "card";
}

ArtifactKind artifact_kind_from_string(std::string_view name) {
  if (name == "card") return ArtifactKind::Card;
  if (name == "query") return ArtifactKind::Query;
  if (name == "question") return ArtifactKind::Question;
  throw InputError("unknown artifact kind: " + std::string(name));
}

VectorStore::VectorStore(const VectorStore& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
  keys_ = other.keys_;
  dim_ = other.dim_;
  model_id_ = other.model_id_;
}

VectorStore& VectorStore::operator=(const VectorStore& other) {
  if (this == &other) return *this;
  std::unique_lock lock(mutex_, std::defer_lock);
  std::shared_lock other_lock(other.mutex_, std::defer_lock);
  std::lock(lock, other_lock);
  entries_ = other.entries_;
  keys_ = other.keys_;
  dim_ = other.dim_;
  model_id_ = other.model_id_;
  return *this;
}

void VectorStore::add(StoreKey key, Embedding embedding) {
  std::unique_lock lock(mutex_);
  if (embedding.values.size() != embedding.dim || embedding.dim == 0) {
    throw InputError("embedding length does not match its dim");
  }
  if (entries_.empty()) {
    dim_ = embedding.dim;
    model_id_ = embedding.model_id;
  } else if (embedding.dim != dim_ || embedding.model_id != model_id_) {
    throw InputError("embedding dim/model does not match the store");
  }
  if (!keys_.insert(key).second) throw InputError("duplicate store key for document " + key.doc_id);
  entries_.emplace_back(std::move(key), std::move(embedding));
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t VectorStore::dim() const {
  std::shared_lock lock(mutex_);
  return dim_;
}

std::string VectorStore::model_id() const {
  std::shared_lock lock(mutex_);
  return model_id_;
}

std::vector<std::pair<StoreKey, Embedding>> VectorStore::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::vector<StoreHit> VectorStore::search(const Embedding& query, std::size_t k,
                                          std::optional<ArtifactKind> kind_filter) const {
  std::shared_lock lock(mutex_);
  if (entries_.empty()) throw StateError("vector store is empty");
  if (query.values.size() != dim_) throw InputError("query dimension does not match the store");
  std::vector<StoreHit> hits;
  for (const auto& [key, emb] : entries_) {
    if (kind_filter && key.kind != *kind_filter) continue;
    hits.push_back({key, cosine(query, emb)});
  }
  std::sort(hits.begin(), hits.end(), [](const StoreHit& l, const StoreHit& r) {
    if (l.score != r.score) return l.score > r.score;
    return l.key < r.key;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

void VectorStore::save(const std::string& base_path) const {
  std::shared_lock lock(mutex_);
  std::string bytes;
  bytes.reserve(entries_.size() * dim_ * 4);
  json keys = json::array();
  for (const auto& [key, emb] : entries_) {
    for (float v : emb.values) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<char>((bits >> s) & 0xFF));
    }
    keys.push_back({{"doc_id", key.doc_id}, {"kind", to_string(key.kind)}, {"ordinal", key.ordinal}});
  }
  const json header = {{"dim", dim_}, {"model_id", model_id_}, {"keys", keys}};
  detail::write_file_atomic(base_path + ".vec", bytes);
  detail::write_file_atomic(base_path + ".keys.json", header.dump(2) + "\n");
}

VectorStore VectorStore::load(const std::string& base_path) {
  std::ifstream keys_in(base_path + ".keys.json");
  if (!keys_in) throw MissingArtifactError("missing vector store keys: " + base_path + ".keys.json");
  std::ifstream vec_in(base_path + ".vec", std::ios::binary);
  if (!vec_in) throw MissingArtifactError("missing vector store data: " + base_path + ".vec");
  json header;
  try {
    header = json::parse(keys_in);
  } catch (const json::exception& e) {
    throw StorageError(std::string("corrupt vector store keys: ") + e.what());
  }
  const std::string bytes((std::istreambuf_iterator<char>(vec_in)), std::istreambuf_iterator<char>());

  VectorStore store;
  const auto dim = header.at("dim").get<std::size_t>();
  const auto model = header.at("model_id").get<std::string>();
  const auto& keys = header.at("keys");
  if (bytes.size() != keys.size() * dim * 4) throw StorageError("vector store size does not match its keys");
  std::size_t offset = 0;
  for (const auto& k : keys) {
    Embedding emb{std::vector<float>(dim), dim, model};
    for (std::size_t i = 0; i < dim; ++i) {
      std::uint32_t bits = 0;
      for (int s = 0; s < 4; ++s) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset++])) << (8 * s);
      emb.values[i] = std::bit_cast<float>(bits);
    }
    store.add(StoreKey{k.at("doc_id").get<std::string>(), artifact_kind_from_string(k.at("kind").get<std::string>()),
                       k.at("ordinal").get<std::size_t>()},
              std::move(emb));
  }
  return store;
}

std::vector<StoreHit> store_search(const VectorStore& store, const Embedding& query, std::size_t k,
                                   std::optional<ArtifactKind> kind_filter) {
  return store.search(query, k, kind_filter);
}

std::vector<RankedResult> semantic_rerank_candidates(const Embedding& query_emb,
                                                     const std::vector<RerankCandidate>& candidates,
                                                     EmbeddingBackend& backend, std::size_t k) {
  if (candidates.empty()) throw InputError("semantic rerank needs at least one candidate");
  std::map<std::string, Embedding> cache;
  std::map<std::string, double> best;
  for (const auto& c : candidates) {
    auto it = cache.find(c.section_text);
    if (it == cache.end()) {
      const std::string text = c.section_text.empty() ? c.doc_id : c.section_text;
      it = cache.emplace(c.section_text, embed(text, backend)).first;
    }
    const double n = norm(it->second.values);
    const double score = n == 0.0 ? 0.0 : cosine(query_emb, it->second);
    auto [pos, inserted] = best.emplace(c.doc_id, score);
    if (!inserted) pos->second = std::max(pos->second, score);
  }
  std::vector<RankedResult> results;
  for (const auto& [doc, score] : best) results.push_back({doc, score, 0});
  std::stable_sort(results.begin(), results.end(),
                   [](const RankedResult& l, const RankedResult& r) { return l.score > r.score; });
  if (results.size() > k) results.resize(k);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
  return results;
}

}  // namespace qcomp
