#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qcomp {

struct Embedding {
  std::vector<float> values;
  std::size_t dim = 0;
  std::string model_id;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // Raw vector for `text`; embed() checks it against dimension().
  virtual std::vector<float> compute(std::string_view text) = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string model_id() const = 0;
};

// Feature-hashes each case-folded token into `dim` buckets, then
// L2-normalizes. Deterministic and thread-safe.
class HashStubEmbedding final : public EmbeddingBackend {
 public:
  explicit HashStubEmbedding(std::size_t dim = 256);
  std::vector<float> compute(std::string_view text) override;
  std::size_t dimension() const override { return dim_; }
  std::string model_id() const override;

 private:
  std::size_t dim_;
};

/// Throws InputError on empty text, BackendError when the backend fails and
/// ContractError on a dimension mismatch or non-finite values.
Embedding embed(std::string_view text, EmbeddingBackend& backend);

/// Throws InputError on dimension mismatch or a zero vector.
double cosine(const Embedding& a, const Embedding& b);

enum class ArtifactKind { Card, Query, Question };

std::string_view to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(std::string_view name);

struct StoreKey {
  std::string doc_id;
  ArtifactKind kind = ArtifactKind::Card;
  std::size_t ordinal = 0;

  friend auto operator<=>(const StoreKey&, const StoreKey&) = default;
};

struct StoreHit {
  StoreKey key;
  double score = 0.0;
};

// In-memory exact-search vector store. Readers may run concurrently;
// add() takes an exclusive lock.
class VectorStore {
 public:
  VectorStore() = default;
  VectorStore(const VectorStore& other);
  VectorStore& operator=(const VectorStore& other);

  // The first entry fixes dim and model_id. Throws InputError on mismatch or
  // a duplicate key.
  void add(StoreKey key, Embedding embedding);

  std::size_t size() const;
  std::size_t dim() const;
  std::string model_id() const;
  std::vector<std::pair<StoreKey, Embedding>> entries() const;

  /// Brute-force cosine scan; descending score, ties by key order.
  std::vector<StoreHit> search(const Embedding& query, std::size_t k,
                               std::optional<ArtifactKind> kind_filter = std::nullopt) const;

  // <base>.vec holds little-endian float32 rows; <base>.keys.json holds
  // {"dim","model_id","keys":[{"doc_id","kind","ordinal"}]}. Both written
  // atomically. Throws StorageError.
  void save(const std::string& base_path) const;
  static VectorStore load(const std::string& base_path);

 private:
  mutable std::shared_mutex mutex_;
  std::vector<std::pair<StoreKey, Embedding>> entries_;
  std::set<StoreKey> keys_;
  std::size_t dim_ = 0;
  std::string model_id_;
};

std::vector<StoreHit> store_search(const VectorStore& store, const Embedding& query, std::size_t k,
                                   std::optional<ArtifactKind> kind_filter = std::nullopt);

struct RankedResult {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RerankCandidate {
  std::string doc_id;
  std::string section_text;
};

/// Embeds every candidate's section text, scores it against `query_emb`,
/// keeps the best section per document and returns the top k documents
/// (descending score, ties by doc id).
std::vector<RankedResult> semantic_rerank_candidates(const Embedding& query_emb,
                                                     const std::vector<RerankCandidate>& candidates,
                                                     EmbeddingBackend& backend, std::size_t k);

}  // namespace qcomp
