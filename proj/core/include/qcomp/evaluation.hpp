#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/retrieval.hpp"

namespace qcomp {

enum class QueryClass { Technical, Conceptual };
std::string_view to_string(QueryClass c);
QueryClass query_class_from_string(std::string_view name);  // accepts technical/conceptual/v2/v3

struct SingleHopCase {
  std::string query_id;
  std::string query;
  std::string gold_doc_id;
  QueryClass query_class = QueryClass::Technical;
};

enum class LengthBucket { W0to4k, W4to8k, Other };
std::string_view to_string(LengthBucket b);

/// Whitespace word count of the raw context: < 4000, < 8000, otherwise Other.
LengthBucket length_bucket_for(std::string_view context);

struct MultihopCase {
  std::string case_id;
  std::string context;
  std::string question;
  std::vector<std::string> gold_answers;
  LengthBucket length_bucket = LengthBucket::W0to4k;
};

// Single-gold indicator: 1.0 iff gold is ranked within k.
double recall_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k);
double accuracy_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k);
// 1/rank when gold is ranked within k, else 0.
double mrr_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k);

/// Lowercase, drop ASCII punctuation, drop articles a/an/the, collapse
/// whitespace.
std::string normalize_answer(std::string_view s);

/// Bag-of-tokens F1 against each gold answer; the maximum is returned.
double token_f1(std::string_view prediction, const std::vector<std::string>& gold_answers);

struct MetricCell {
  std::string strategy;
  std::string query_class;  // "technical", "conceptual" or "all"
  std::size_t cutoff = 0;
  std::size_t cases = 0;
  double accuracy = 0.0;
  double mrr = 0.0;
};

struct BucketSummary {
  std::size_t cases = 0;
  double mean_f1 = 0.0;
};

struct MultihopCaseResult {
  std::string case_id;
  LengthBucket bucket = LengthBucket::W0to4k;
  bool failed = false;
  std::string error;
  double f1 = 0.0;
  std::string answer;
  std::vector<std::size_t> selected_indices;
  bool empty_context = false;
};

struct MultihopSummary {
  double mean_f1 = 0.0;
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::map<std::string, BucketSummary> buckets;  // always has 0-4k, 4k-8k, other
  std::vector<MultihopCaseResult> cases;
};

struct EvalReport {
  std::string task;  // "single-hop" or "multihop"
  std::vector<MetricCell> cells;    // per strategy x query class x cutoff
  std::vector<MetricCell> overall;  // per strategy x cutoff
  std::vector<std::string> skipped_cases;
  std::optional<MultihopSummary> multihop;
  std::map<std::string, std::string> metadata;
};

/// Cells are sorted by (strategy, query class, cutoff). Cases whose gold
/// document is absent from an index are skipped and listed.
EvalReport run_single_hop_benchmark(const std::vector<SingleHopCase>& cases, const std::vector<Strategy>& strategies,
                                    const std::map<Strategy, const IndexedCorpus*>& indexes,
                                    const std::vector<std::size_t>& cutoffs, const RetrievalConfig& base_cfg,
                                    const PosTagger& tagger, EmbeddingBackend* embed_backend);

/// Runs multihop_answer per case (up to `jobs` concurrently). Backend
/// failures are recorded per case and excluded from the means.
EvalReport run_multihop_benchmark(const std::vector<MultihopCase>& cases, const MultihopConfig& cfg,
                                  const PosTagger& tagger, GenerationBackend& gen_backend, std::size_t jobs = 1);

struct StorageReport {
  std::size_t documents = 0;
  std::size_t compressed_records = 0;
  std::size_t record_families_per_document = 0;
  std::size_t chunk_records = 0;
  std::size_t chunk_size_words = 0;
  double reduction = 0.0;  // 1 - compressed / chunk
};

StorageReport storage_report(const IndexedCorpus& compressed, const IndexedCorpus& chunked);

std::string report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);
std::string storage_report_json(const StorageReport& report);
std::string storage_report_text(const StorageReport& report);

// Writes <base>.json and <base>.txt. Throws StorageError.
void write_report(const EvalReport& report, const std::string& base_path);

// {"query_id","query","gold_doc_id","query_class"}; gold and class optional
// for plain query batches.
std::vector<SingleHopCase> read_single_hop_cases(std::istream& in);
// LongBench rows {"_id","context","input","answers":[...]}; also accepts
// {"case_id","context","question","gold_answers"}.
std::vector<MultihopCase> read_multihop_cases(std::istream& in);

}  // namespace qcomp
