#include "qcomp/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <istream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "qcomp/error.hpp"
#include "text_util.hpp"

namespace qcomp {

using nlohmann::json;

std::string_view to_string(QueryClass c) { return c == QueryClass::Technical ? "technical" : "conceptual"; }

QueryClass query_class_from_string(std::string_view name) {
  const auto lower = to_lower_ascii(name);
  if (lower == "technical" || lower == "v2") return QueryClass::Technical;
  if (lower == "conceptual" || lower == "v3") return QueryClass::Conceptual;
  throw InputError("unknown query class: " + std::string(name));
}

std::string_view to_string(LengthBucket b) {
  switch (b) {
    case LengthBucket::W0to4k: return "0-4k";
    case LengthBucket::W4to8k: return "4k-8k";
    case LengthBucket::Other: return "other";
  }
  return "other";
}

LengthBucket length_bucket_for(std::string_view context) {
  const auto words = detail::split_whitespace(context).size();
  if (words < 4000) return LengthBucket::W0to4k;
  if (words < 8000) return LengthBucket::W4to8k;
  return LengthBucket::Other;
}

namespace {

std::optional<std::size_t> rank_of(const std::vector<RankedResult>& results, std::string_view gold) {
  for (const auto& r : results) {
    if (r.doc_id == gold) return r.rank;
  }
  return std::nullopt;
}

}  // namespace

double recall_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k) {
  const auto rank = rank_of(results, gold);
  return rank && *rank <= k ? 1.0 : 0.0;
}

double accuracy_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k) {
  return recall_at_k(results, gold, k);
}

double mrr_at_k(const std::vector<RankedResult>& results, std::string_view gold, std::size_t k) {
  const auto rank = rank_of(results, gold);
  return rank && *rank <= k ? 1.0 / static_cast<double>(*rank) : 0.0;
}

std::string normalize_answer(std::string_view s) {
  std::string no_punct;
  for (char c : to_lower_ascii(s)) {
    if (!detail::is_punct(c)) no_punct.push_back(c);
  }
  std::vector<std::string> words;
  for (auto w : detail::split_whitespace(no_punct)) {
    if (w != "a" && w != "an" && w != "the") words.emplace_back(w);
  }
  return detail::join(words, " ");
}

namespace {

double f1_single(const std::vector<std::string_view>& pred, const std::vector<std::string_view>& gold) {
  if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
  std::unordered_map<std::string_view, long> counts;
  for (auto t : gold) ++counts[t];
  long same = 0;
  for (auto t : pred) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  const double precision = static_cast<double>(same) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(same) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  const auto pred_norm = normalize_answer(prediction);
  const auto pred = detail::split_whitespace(pred_norm);
  double best = 0.0;
  for (const auto& g : gold_answers) {
    const auto gold_norm = normalize_answer(g);
    best = std::max(best, f1_single(pred, detail::split_whitespace(gold_norm)));
  }
  return best;
}

EvalReport run_single_hop_benchmark(const std::vector<SingleHopCase>& cases, const std::vector<Strategy>& strategies,
                                    const std::map<Strategy, const IndexedCorpus*>& indexes,
                                    const std::vector<std::size_t>& cutoffs, const RetrievalConfig& base_cfg,
                                    const PosTagger& tagger, EmbeddingBackend* embed_backend) {
  if (cutoffs.empty()) throw InputError("at least one cutoff is required");
  if (std::find(cutoffs.begin(), cutoffs.end(), 0) != cutoffs.end()) throw InputError("cutoffs must be positive");
  const auto max_cutoff = *std::max_element(cutoffs.begin(), cutoffs.end());

  auto sorted_strategies = strategies;
  std::sort(sorted_strategies.begin(), sorted_strategies.end(),
            [](Strategy l, Strategy r) { return to_string(l) < to_string(r); });
  sorted_strategies.erase(std::unique(sorted_strategies.begin(), sorted_strategies.end()), sorted_strategies.end());
  auto sorted_cutoffs = cutoffs;
  std::sort(sorted_cutoffs.begin(), sorted_cutoffs.end());
  sorted_cutoffs.erase(std::unique(sorted_cutoffs.begin(), sorted_cutoffs.end()), sorted_cutoffs.end());

  EvalReport report;
  report.task = "single-hop";
  std::set<std::string> skipped;

  for (auto strategy : sorted_strategies) {
    auto it = indexes.find(strategy);
    if (it == indexes.end() || !it->second) {
      throw MissingArtifactError("no index for strategy " + std::string(to_string(strategy)));
    }
    const auto& index = *it->second;
    RetrievalConfig cfg = base_cfg;
    cfg.strategy = strategy;
    cfg.top_k = max_cutoff;
    cfg.lexical_prefilter_n = std::max(cfg.lexical_prefilter_n, max_cutoff);

    // [class][cutoff] -> sums
    struct Sums {
      std::size_t n = 0;
      double acc = 0.0, mrr = 0.0;
    };
    std::map<std::string, std::map<std::size_t, Sums>> sums;
    for (const auto* cls : {"technical", "conceptual", "all"}) {
      for (auto k : sorted_cutoffs) sums[cls][k] = {};
    }
    for (const auto& c : cases) {
      if (!index.contains(c.gold_doc_id)) {
        skipped.insert(c.query_id);
        continue;
      }
      const auto results = single_hop_retrieve(c.query, index, cfg, tagger, embed_backend);
      for (auto k : sorted_cutoffs) {
        const double acc = accuracy_at_k(results, c.gold_doc_id, k);
        const double mrr = mrr_at_k(results, c.gold_doc_id, k);
        for (const auto& cls : {std::string(to_string(c.query_class)), std::string("all")}) {
          auto& s = sums[cls][k];
          ++s.n;
          s.acc += acc;
          s.mrr += mrr;
        }
      }
    }
    for (const auto& [cls, by_cutoff] : sums) {
      for (const auto& [k, s] : by_cutoff) {
        MetricCell cell{std::string(to_string(strategy)), cls, k, s.n, 0.0, 0.0};
        if (s.n) {
          cell.accuracy = s.acc / static_cast<double>(s.n);
          cell.mrr = s.mrr / static_cast<double>(s.n);
        }
        (cls == "all" ? report.overall : report.cells).push_back(cell);
      }
    }
  }

  report.skipped_cases.assign(skipped.begin(), skipped.end());
  std::vector<std::string> names, ks;
  for (auto s : sorted_strategies) names.emplace_back(to_string(s));
  for (auto k : sorted_cutoffs) ks.push_back(std::to_string(k));
  report.metadata["strategies"] = detail::join(names, ",");
  report.metadata["cutoffs"] = detail::join(ks, ",");
  report.metadata["lexical_prefilter_n"] = std::to_string(std::max(base_cfg.lexical_prefilter_n, max_cutoff));
  report.metadata["cases"] = std::to_string(cases.size());
  report.metadata["skipped"] = std::to_string(report.skipped_cases.size());
  if (embed_backend) report.metadata["embedding_model"] = embed_backend->model_id();
  return report;
}

EvalReport run_multihop_benchmark(const std::vector<MultihopCase>& cases, const MultihopConfig& cfg,
                                  const PosTagger& tagger, GenerationBackend& gen_backend, std::size_t jobs) {
  if (cases.empty()) throw InputError("multihop benchmark needs at least one case");
  cfg.validate();

  std::vector<MultihopCaseResult> results(cases.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const auto& c = cases[i];
      auto& r = results[i];
      r.case_id = c.case_id;
      r.bucket = c.length_bucket;
      try {
        const auto answer = multihop_answer(c.question, c.context, cfg, tagger, gen_backend);
        r.answer = answer.answer;
        r.empty_context = answer.empty_context;
        for (const auto& p : answer.selected) r.selected_indices.push_back(p.index);
        r.f1 = token_f1(answer.answer, c.gold_answers);
      } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, cases.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 1; j < workers; ++j) pool.emplace_back(worker);
    worker();
  }

  MultihopSummary summary;
  for (auto b : {LengthBucket::W0to4k, LengthBucket::W4to8k, LengthBucket::Other}) {
    summary.buckets[std::string(to_string(b))] = {};
  }
  double total = 0.0;
  std::map<std::string, double> bucket_totals;
  for (const auto& r : results) {
    if (r.failed) {
      ++summary.failed;
      continue;
    }
    ++summary.scored;
    total += r.f1;
    const auto key = std::string(to_string(r.bucket));
    ++summary.buckets[key].cases;
    bucket_totals[key] += r.f1;
  }
  if (summary.scored) summary.mean_f1 = total / static_cast<double>(summary.scored);
  for (auto& [key, b] : summary.buckets) {
    if (b.cases) b.mean_f1 = bucket_totals[key] / static_cast<double>(b.cases);
  }
  summary.cases = std::move(results);

  EvalReport report;
  report.task = "multihop";
  report.multihop = std::move(summary);
  report.metadata["L"] = std::to_string(cfg.rerank.threshold);
  report.metadata["max_passages"] = std::to_string(cfg.rerank.max_passages);
  report.metadata["preserve_order"] = cfg.rerank.preserve_order ? "true" : "false";
  report.metadata["adaptive_fallback"] = cfg.rerank.adaptive_fallback ? "true" : "false";
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.2f", cfg.gen_params.temperature);
  report.metadata["temperature"] = temp;
  report.metadata["passage_split"] = cfg.passage_split == PassageSplit::Paragraph ? "paragraph" : "sentence-window";
  report.metadata["length_buckets"] = "whitespace words of context: <4000, <8000, other";
  report.metadata["generation_backend"] = gen_backend.id();
  report.metadata["cases"] = std::to_string(cases.size());
  return report;
}

StorageReport storage_report(const IndexedCorpus& compressed, const IndexedCorpus& chunked) {
  StorageReport r;
  r.documents = compressed.documents.size();
  r.compressed_records = compressed.stored_records();
  r.record_families_per_document = compressed.options.embed_families.size();
  r.chunk_records = chunked.stored_records();
  r.chunk_size_words = chunked.chunk_config.size_words;
  if (r.chunk_records > 0) {
    r.reduction = 1.0 - static_cast<double>(r.compressed_records) / static_cast<double>(r.chunk_records);
  }
  return r;
}

namespace {

json cell_json(const MetricCell& c) {
  return {{"strategy", c.strategy}, {"query_class", c.query_class}, {"cutoff", c.cutoff},
          {"cases", c.cases},       {"accuracy", c.accuracy},       {"mrr", c.mrr}};
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string report_json(const EvalReport& report) {
  json j;
  j["task"] = report.task;
  j["metadata"] = report.metadata;
  if (report.task == "single-hop") {
    json cells = json::array(), overall = json::array();
    for (const auto& c : report.cells) cells.push_back(cell_json(c));
    for (const auto& c : report.overall) overall.push_back(cell_json(c));
    j["cells"] = cells;
    j["overall"] = overall;
    j["skipped_cases"] = report.skipped_cases;
  }
  if (report.multihop) {
    const auto& m = *report.multihop;
    json buckets = json::object();
    for (const auto& [k, b] : m.buckets) buckets[k] = {{"cases", b.cases}, {"mean_f1", b.mean_f1}};
    json cases = json::array();
    for (const auto& c : m.cases) {
      json row = {{"case_id", c.case_id}, {"bucket", to_string(c.bucket)}, {"failed", c.failed}};
      if (c.failed) {
        row["error"] = c.error;
      } else {
        row["f1"] = c.f1;
        row["answer"] = c.answer;
        row["selected_indices"] = c.selected_indices;
        row["empty_context"] = c.empty_context;
      }
      cases.push_back(std::move(row));
    }
    j["multihop"] = {{"mean_f1", m.mean_f1}, {"scored", m.scored}, {"failed", m.failed},
                     {"buckets", buckets},   {"cases", cases}};
  }
  return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& report) {
  std::string out;
  if (report.task == "single-hop") {
    out += pad("strategy", 18) + pad("class", 12) + pad("k", 4) + pad("cases", 7) + pad("accuracy", 10) + "mrr\n";
    const auto row = [&](const MetricCell& c) {
      out += pad(c.strategy, 18) + pad(c.query_class, 12) + pad(std::to_string(c.cutoff), 4) +
             pad(std::to_string(c.cases), 7) + pad(fmt4(c.accuracy), 10) + fmt4(c.mrr) + "\n";
    };
    for (const auto& c : report.cells) row(c);
    for (const auto& c : report.overall) row(c);
    out += "skipped cases: " + std::to_string(report.skipped_cases.size()) + "\n";
  }
  if (report.multihop) {
    const auto& m = *report.multihop;
    out += pad("bucket", 10) + pad("cases", 7) + "mean_f1\n";
    for (const auto& [k, b] : m.buckets) out += pad(k, 10) + pad(std::to_string(b.cases), 7) + fmt4(b.mean_f1) + "\n";
    out += pad("overall", 10) + pad(std::to_string(m.scored), 7) + fmt4(m.mean_f1) + "\n";
    out += "failed cases: " + std::to_string(m.failed) + "\n";
  }
  for (const auto& [k, v] : report.metadata) out += "# " + k + ": " + v + "\n";
  return out;
}

std::string storage_report_json(const StorageReport& r) {
  const json j = {{"documents", r.documents},
                  {"compressed_records", r.compressed_records},
                  {"record_families_per_document", r.record_families_per_document},
                  {"chunk_records", r.chunk_records},
                  {"chunk_size_words", r.chunk_size_words},
                  {"reduction", r.reduction}};
  return j.dump(2) + "\n";
}

std::string storage_report_text(const StorageReport& r) {
  std::string out;
  out += "documents:              " + std::to_string(r.documents) + "\n";
  out += "compressed records:     " + std::to_string(r.compressed_records) + " (" +
         std::to_string(r.record_families_per_document) + " families per document)\n";
  out += "fixed-size chunks:      " + std::to_string(r.chunk_records) + " (" + std::to_string(r.chunk_size_words) +
         " words)\n";
  out += "record reduction:       " + fmt4(r.reduction * 100.0) + "%\n";
  return out;
}

void write_report(const EvalReport& report, const std::string& base_path) {
  detail::write_file_atomic(base_path + ".json", report_json(report));
  detail::write_file_atomic(base_path + ".txt", report_text(report));
}

namespace {

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
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
    try {
      fn(obj);
    } catch (const json::exception& e) {
      throw InputError(where + e.what());
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
}

std::string string_field(const json& obj, std::initializer_list<const char*> keys, bool required) {
  for (const char* k : keys) {
    if (obj.contains(k) && !obj[k].is_null()) {
      if (obj[k].is_string()) return obj[k].get<std::string>();
      if (obj[k].is_number_integer()) return std::to_string(obj[k].get<long long>());
      throw InputError(std::string("field \"") + k + "\" must be a string");
    }
  }
  if (required) throw InputError(std::string("missing field \"") + *keys.begin() + "\"");
  return {};
}

}  // namespace

std::vector<SingleHopCase> read_single_hop_cases(std::istream& in) {
  std::vector<SingleHopCase> cases;
  for_each_json_line(in, [&](const json& obj) {
    SingleHopCase c;
    c.query = string_field(obj, {"query"}, true);
    c.query_id = string_field(obj, {"query_id", "id"}, false);
    if (c.query_id.empty()) c.query_id = "q" + std::to_string(cases.size() + 1);
    c.gold_doc_id = string_field(obj, {"gold_doc_id"}, false);
    const auto cls = string_field(obj, {"query_class"}, false);
    if (!cls.empty()) c.query_class = query_class_from_string(cls);
    cases.push_back(std::move(c));
  });
  return cases;
}

std::vector<MultihopCase> read_multihop_cases(std::istream& in) {
  std::vector<MultihopCase> cases;
  for_each_json_line(in, [&](const json& obj) {
    MultihopCase c;
    c.case_id = string_field(obj, {"_id", "case_id"}, false);
    if (c.case_id.empty()) c.case_id = "case" + std::to_string(cases.size() + 1);
    c.context = string_field(obj, {"context"}, true);
    c.question = string_field(obj, {"input", "question"}, true);
    const char* key = obj.contains("answers") ? "answers" : "gold_answers";
    if (!obj.contains(key) || !obj[key].is_array() || obj[key].empty()) {
      throw InputError("\"answers\" must be a non-empty array");
    }
    for (const auto& a : obj[key]) c.gold_answers.push_back(a.get<std::string>());
    c.length_bucket = length_bucket_for(c.context);
    cases.push_back(std::move(c));
  });
  return cases;
}

}  // namespace qcomp
