#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcomp/backend.hpp"
#include "qcomp/compression.hpp"
#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"
#include "qcomp/evaluation.hpp"
#include "qcomp/lexical.hpp"
#include "qcomp/reranker.hpp"
#include "qcomp/retrieval.hpp"
#include "qcomp/semantic.hpp"

namespace qcomp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Settings {
  // shared
  std::string config;
  std::string work = "qcomp-work";
  std::size_t top_k = 3;
  std::size_t L = 2;
  double temperature = 0.5;
  std::size_t card_limit = 300;
  std::string card_limit_unit = "words";
  std::size_t chunk_size = 350;
  std::size_t chunk_overlap = 0;
  std::string backend_url;
  std::string embed_url;
  std::string strategy = "question-centric";
  std::size_t jobs = default_jobs();
  std::string adp_lexicon;
  std::string cconj_lexicon;
  std::string prompts_dir;
  std::size_t max_passages = 6;
  std::size_t prefilter = 10;
  std::size_t embed_dim = 256;
  std::size_t technical = 3;
  std::size_t conceptual = 2;

  // per subcommand
  std::string corpus_file;
  std::string query;
  std::string queries_file;
  std::string question;
  std::string context_file;
  std::string doc_id;
  std::string passages_file;
  std::string task = "single-hop";
  std::string cases_file;
  std::string out_base;
  std::vector<std::size_t> cutoffs = {3, 5};
};

struct Paths {
  fs::path corpus, artifacts, index, reports;
  explicit Paths(const std::string& work)
      : corpus(fs::path(work) / "corpus.jsonl"),
        artifacts(fs::path(work) / "artifacts"),
        index(fs::path(work) / "index"),
        reports(fs::path(work) / "reports") {}
};

void add_shared_options(CLI::App& sub, Settings& s) {
  sub.add_option("--config", s.config, "Key-value config file; flags override its values")->check(CLI::ExistingFile);
  sub.add_option("--work", s.work, "Working directory holding staged artifacts")->capture_default_str();
  sub.add_option("--top-k", s.top_k, "Number of documents returned per query")->capture_default_str();
  sub.add_option("--L", s.L, "Reranker keyword-frequency threshold")->capture_default_str();
  sub.add_option("--temperature", s.temperature, "Generation temperature")->capture_default_str();
  sub.add_option("--card-limit", s.card_limit, "Maximum paper-card length")->capture_default_str();
  sub.add_option("--card-limit-unit", s.card_limit_unit, "Unit of --card-limit")
      ->check(CLI::IsMember({"words", "characters"}))
      ->capture_default_str();
  sub.add_option("--chunk-size", s.chunk_size, "Chunk size in words for chunking baselines")->capture_default_str();
  sub.add_option("--chunk-overlap", s.chunk_overlap, "Fixed-size chunk overlap in words")->capture_default_str();
  sub.add_option("--backend-url", s.backend_url, "HTTP generation endpoint (deterministic stub when unset)");
  sub.add_option("--embed-url", s.embed_url, "HTTP embedding endpoint (hash stub when unset)");
  sub.add_option("--strategy", s.strategy,
                 "question-centric, bm25-cards, bm25-abstracts, fixed-chunk, recursive-chunk, or all")
      ->capture_default_str();
  sub.add_option("--jobs", s.jobs, "Worker parallelism cap")->capture_default_str();
  sub.add_option("--adp-lexicon", s.adp_lexicon, "Adposition lexicon file, one word per line");
  sub.add_option("--cconj-lexicon", s.cconj_lexicon, "Coordinating-conjunction lexicon file");
  sub.add_option("--prompts", s.prompts_dir, "Directory overriding the built-in prompt templates");
  sub.add_option("--max-passages", s.max_passages, "Passages kept by the reranker")->capture_default_str();
  sub.add_option("--prefilter", s.prefilter, "Documents covered by the lexical prefilter")->capture_default_str();
  sub.add_option("--embed-dim", s.embed_dim, "Hash stub embedding dimension")->capture_default_str();
  sub.add_option("--technical-questions", s.technical, "Technical questions per document")->capture_default_str();
  sub.add_option("--conceptual-questions", s.conceptual, "Conceptual questions per document")
      ->capture_default_str();
  sub.footer(
      "Environment: QCOMP_BACKEND_TOKEN and QCOMP_EMBED_TOKEN are sent as bearer tokens.\n"
      "Exit codes: 0 ok, 2 input error, 3 missing prerequisite, 4 backend error, 1 other.");
}

// Fills options absent from the command line with values from the config file.
void apply_config_file(CLI::App& sub, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::Error& e) {
    throw InputError("cannot read config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (!item.parents.empty() && item.parents != std::vector<std::string>{sub.get_name()}) continue;
    auto name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") continue;
    auto* opt = sub.get_option_no_throw("--" + name);
    if (!opt) throw InputError("unknown key \"" + item.name + "\" in config file " + path);
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InputError("config key \"" + item.name + "\": " + e.what());
    }
  }
}

struct Resolved {
  CompressionOptions compression;
  ChunkConfig chunk;
  RetrievalConfig retrieval;
  MultihopConfig multihop;
};

Resolved resolve(const Settings& s) {
  Resolved r;
  if (s.jobs == 0) throw InputError("--jobs must be positive");
  r.compression.params.temperature = s.temperature;
  r.compression.params.validate();
  r.compression.counts = {s.technical, s.conceptual};
  if (s.technical + s.conceptual == 0) throw InputError("at least one question per document is required");
  r.compression.limit.unit = s.card_limit_unit == "characters" ? CardLimitUnit::Characters : CardLimitUnit::Words;
  r.compression.limit.max = s.card_limit;
  r.compression.limit.validate();
  if (!s.prompts_dir.empty()) r.compression.templates = PromptTemplates::load_dir(s.prompts_dir);
  r.compression.jobs = s.jobs;

  r.chunk.size_words = s.chunk_size;
  r.chunk.overlap_words = s.chunk_overlap;
  r.chunk.validate();

  r.retrieval.top_k = s.top_k;
  r.retrieval.lexical_prefilter_n = s.prefilter;
  if (s.strategy != "all") r.retrieval.strategy = strategy_from_string(s.strategy);
  r.retrieval.validate();

  r.multihop.rerank.threshold = s.L;
  r.multihop.rerank.max_passages = s.max_passages;
  r.multihop.rerank.validate();
  r.multihop.gen_params.temperature = s.temperature;
  r.multihop.validate();
  if (s.embed_dim == 0) throw InputError("--embed-dim must be positive");
  return r;
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

struct Runtime {
  std::unique_ptr<GenerationBackend> gen_inner;
  std::unique_ptr<GenerationBackend> gen;
  std::unique_ptr<EmbeddingBackend> embed_inner;
  std::unique_ptr<EmbeddingBackend> embed;
  LexiconTagger tagger;

  explicit Runtime(const Settings& s) : tagger(make_tagger(s)) {
    const auto bound = static_cast<std::ptrdiff_t>(std::min<std::size_t>(s.jobs, 1024));
    if (s.backend_url.empty()) {
      gen_inner = std::make_unique<DeterministicStub>();
    } else {
      gen_inner = std::make_unique<HttpGenerationBackend>(HttpEndpoint{s.backend_url, env_or_empty("QCOMP_BACKEND_TOKEN")});
    }
    gen = std::make_unique<BoundedGeneration>(*gen_inner, bound);
    if (s.embed_url.empty()) {
      embed_inner = std::make_unique<HashStubEmbedding>(s.embed_dim);
    } else {
      embed_inner = std::make_unique<HttpEmbeddingBackend>(HttpEndpoint{s.embed_url, env_or_empty("QCOMP_EMBED_TOKEN")});
    }
    embed = std::make_unique<BoundedEmbedding>(*embed_inner, bound);
  }

  IndexBackends backends() const { return {gen.get(), embed.get(), &tagger}; }

  static LexiconTagger make_tagger(const Settings& s) {
    if (s.adp_lexicon.empty() && s.cconj_lexicon.empty()) return LexiconTagger();
    auto adp = s.adp_lexicon.empty() ? std::set<std::string>(default_adp_lexicon().begin(), default_adp_lexicon().end())
                                     : read_lexicon_file(s.adp_lexicon);
    auto cconj = s.cconj_lexicon.empty()
                     ? std::set<std::string>(default_cconj_lexicon().begin(), default_cconj_lexicon().end())
                     : read_lexicon_file(s.cconj_lexicon);
    return LexiconTagger(std::move(adp), std::move(cconj));
  }
};

void write_text_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) throw StorageError("cannot write " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot write " + path.string() + ": " + ec.message());
}

std::string read_input_file(const std::string& path, std::istream& stdin_stream) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(stdin_stream), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<Document> load_corpus(const Paths& paths) {
  std::ifstream in(paths.corpus, std::ios::binary);
  if (!in) throw MissingArtifactError("missing artifact " + paths.corpus.string() + " (run `qcomp ingest` first)");
  return read_corpus_jsonl(in);
}

bool needs_compression(Strategy s) { return s == Strategy::QuestionCentric || s == Strategy::Bm25Cards; }

std::vector<Strategy> selected_strategies(const Settings& s) {
  if (s.strategy == "all") return {std::begin(kAllStrategies), std::end(kAllStrategies)};
  return {strategy_from_string(s.strategy)};
}

IndexedCorpus open_index(const Paths& paths, Strategy strategy, const std::vector<Document>& corpus) {
  if (!fs::exists(paths.index / (std::string(to_string(strategy)) + ".json"))) {
    throw MissingArtifactError("missing artifact " + (paths.index / (std::string(to_string(strategy)) + ".json")).string() +
                               " (run `qcomp index --strategy " + std::string(to_string(strategy)) + "` first)");
  }
  return load_index(paths.index.string(), strategy, corpus, paths.artifacts.string());
}

json result_json(const RankedResult& r) { return {{"rank", r.rank}, {"doc_id", r.doc_id}, {"score", r.score}}; }

std::vector<Passage> read_passages(const std::string& text) {
  std::vector<Passage> passages;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      Passage p;
      p.index = obj.contains("index") ? obj.at("index").get<std::size_t>() : passages.size();
      p.text = obj.at("text").get<std::string>();
      passages.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw InputError("passages line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return passages;
}

int cmd_ingest(const Settings& s, std::istream& in, std::ostream& out) {
  const Paths paths(s.work);
  std::istringstream text(read_input_file(s.corpus_file, in));
  const auto docs = read_corpus_jsonl(text);
  std::ostringstream dump;
  write_corpus_jsonl(dump, docs);
  write_text_file(paths.corpus, dump.str());
  out << "ingested " << docs.size() << " documents into " << paths.corpus.string() << "\n";
  return kOk;
}

int cmd_compress(const Settings& s, const Resolved& r, std::ostream& out, std::ostream& err) {
  const Paths paths(s.work);
  const auto docs = load_corpus(paths);
  Runtime rt(s);
  const auto artifacts = compress_corpus(docs, *rt.gen, rt.tagger, r.compression);
  for (const auto& a : artifacts) {
    for (const auto& w : a.queries.warnings) err << "warning: " << a.doc_id << ": " << w << "\n";
  }
  const auto manifest = persist_artifacts(artifacts, paths.artifacts.string());
  out << "compressed " << manifest.documents.size() << " documents into " << paths.artifacts.string() << " ("
      << manifest.files.size() << " files, " << manifest.logical_records() << " logical records)\n";
  return kOk;
}

int cmd_index(const Settings& s, const Resolved& r, std::ostream& out) {
  const Paths paths(s.work);
  const auto docs = load_corpus(paths);
  Runtime rt(s);
  IndexOptions options;
  options.compression = r.compression;
  options.chunk = r.chunk;
  for (auto strategy : selected_strategies(s)) {
    IndexedCorpus index;
    if (needs_compression(strategy)) {
      index = build_index_from_artifacts(docs, load_artifacts(paths.artifacts.string()), strategy, rt.backends(),
                                         options);
    } else {
      index = build_index(docs, strategy, rt.backends(), options);
    }
    save_index(index, paths.index.string());
    out << "indexed " << to_string(strategy) << ": " << index.documents.size() << " documents, "
        << index.stored_records() << " stored records\n";
  }
  return kOk;
}

int cmd_retrieve(const Settings& s, const Resolved& r, std::ostream& out) {
  if (s.query.empty() == s.queries_file.empty()) throw InputError("retrieve needs exactly one of --query or --queries");
  if (s.strategy == "all") throw InputError("retrieve needs a single --strategy");
  const Paths paths(s.work);
  const auto docs = load_corpus(paths);
  const auto index = open_index(paths, r.retrieval.strategy, docs);
  Runtime rt(s);
  if (!s.query.empty()) {
    for (const auto& res : single_hop_retrieve(s.query, index, r.retrieval, rt.tagger, rt.embed.get())) {
      out << result_json(res).dump() << "\n";
    }
    return kOk;
  }
  std::ifstream in(s.queries_file, std::ios::binary);
  if (!in) throw InputError("cannot read " + s.queries_file);
  for (const auto& c : read_single_hop_cases(in)) {
    json results = json::array();
    for (const auto& res : single_hop_retrieve(c.query, index, r.retrieval, rt.tagger, rt.embed.get())) {
      results.push_back(result_json(res));
    }
    out << json{{"query_id", c.query_id}, {"results", results}}.dump() << "\n";
  }
  return kOk;
}

int cmd_answer(const Settings& s, const Resolved& r, std::istream& in, std::ostream& out) {
  if (s.question.empty()) throw InputError("answer needs --question");
  if (s.context_file.empty() == s.doc_id.empty()) throw InputError("answer needs exactly one of --context or --doc");
  std::string context;
  if (!s.doc_id.empty()) {
    const auto docs = load_corpus(Paths(s.work));
    const auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == s.doc_id; });
    if (it == docs.end()) throw InputError("unknown document id " + s.doc_id);
    context = it->full_text;
  } else {
    context = read_input_file(s.context_file, in);
  }
  Runtime rt(s);
  const auto answer = multihop_answer(s.question, context, r.multihop, rt.tagger, *rt.gen);
  json selected = json::array();
  for (const auto& p : answer.selected) selected.push_back(p.index);
  out << json{{"answer", answer.answer},
              {"selected", selected},
              {"threshold_used", answer.threshold_used},
              {"empty_context", answer.empty_context}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_rerank(const Settings& s, const Resolved& r, std::istream& in, std::ostream& out) {
  if (s.query.empty()) throw InputError("rerank needs --query");
  const auto passages = read_passages(read_input_file(s.passages_file.empty() ? "-" : s.passages_file, in));
  const LexiconTagger tagger = Runtime::make_tagger(s);
  for (const auto& p : rerank(s.query, passages, r.multihop.rerank, tagger)) {
    out << json{{"index", p.index}, {"text", p.text}}.dump() << "\n";
  }
  return kOk;
}

std::vector<SingleHopCase> load_single_hop_cases(const std::string& path) {
  if (path.empty()) throw InputError("--cases is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  auto cases = read_single_hop_cases(in);
  if (cases.empty()) throw InputError("no cases in " + path);
  return cases;
}

int run_single_hop(const Settings& s, const Resolved& r, const std::vector<Strategy>& strategies,
                   const std::string& default_name, bool with_storage, std::ostream& out) {
  const Paths paths(s.work);
  const auto docs = load_corpus(paths);
  std::map<Strategy, IndexedCorpus> indexes;
  for (auto strategy : strategies) indexes.emplace(strategy, open_index(paths, strategy, docs));
  const auto cases = load_single_hop_cases(s.cases_file);
  Runtime rt(s);
  std::map<Strategy, const IndexedCorpus*> views;
  for (const auto& [k, v] : indexes) views[k] = &v;
  auto report = run_single_hop_benchmark(cases, strategies, views, s.cutoffs, r.retrieval, rt.tagger, rt.embed.get());
  const auto base = s.out_base.empty() ? (paths.reports / default_name).string() : s.out_base;
  write_report(report, base);
  out << report_text(report);
  if (with_storage) {
    const auto storage = storage_report(indexes.at(Strategy::QuestionCentric), indexes.at(Strategy::FixedChunk));
    write_text_file(base + ".storage.json", storage_report_json(storage));
    write_text_file(base + ".storage.txt", storage_report_text(storage));
    out << "\n" << storage_report_text(storage);
  }
  return kOk;
}

int cmd_eval(const Settings& s, const Resolved& r, std::ostream& out) {
  if (s.task == "single-hop") return run_single_hop(s, r, selected_strategies(s), "single-hop", false, out);
  if (s.cases_file.empty()) throw InputError("--cases is required");
  std::ifstream in(s.cases_file, std::ios::binary);
  if (!in) throw InputError("cannot read " + s.cases_file);
  const auto cases = read_multihop_cases(in);
  Runtime rt(s);
  const auto report = run_multihop_benchmark(cases, r.multihop, rt.tagger, *rt.gen, s.jobs);
  write_report(report, s.out_base.empty() ? (Paths(s.work).reports / "multihop").string() : s.out_base);
  out << report_text(report);
  return kOk;
}

int cmd_compare(const Settings& s, const Resolved& r, std::ostream& out) {
  return run_single_hop(s, r, {std::begin(kAllStrategies), std::end(kAllStrategies)}, "compare", true, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Question-centric knowledge compression and retrieval", "qcomp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qcomp 0.1.0");

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus JSONL file and store it in the work directory");
  ingest->add_option("corpus", s.corpus_file, "Corpus JSON Lines file ('-' for stdin)")->required();
  auto* compress = app.add_subcommand("compress", "Generate questions, queries, keywords and paper cards");
  auto* index = app.add_subcommand("index", "Build retrieval indexes for one strategy or all");
  auto* retrieve = app.add_subcommand("retrieve", "Single-hop retrieval; one JSON result per line");
  retrieve->add_option("--query", s.query, "Query text");
  retrieve->add_option("--queries", s.queries_file, "JSONL batch of {\"query_id\",\"query\"}");
  auto* answer = app.add_subcommand("answer", "Answer a multihop question over one long document");
  answer->add_option("--question", s.question, "Question text");
  answer->add_option("--context", s.context_file, "Document text file ('-' for stdin)");
  answer->add_option("--doc", s.doc_id, "Use an ingested document as the context");
  auto* rerank_cmd = app.add_subcommand("rerank", "Filter JSONL passages {\"index\",\"text\"} by keyword frequency");
  rerank_cmd->add_option("--query", s.query, "Query whose keywords drive the filter");
  rerank_cmd->add_option("--passages", s.passages_file, "Passages file (stdin when omitted)");
  auto* eval = app.add_subcommand("eval", "Run the single-hop or multihop benchmark");
  eval->add_option("--task", s.task, "single-hop or multihop")
      ->check(CLI::IsMember({"single-hop", "multihop"}))
      ->capture_default_str();
  auto* compare = app.add_subcommand("compare", "Compare all five strategies and report storage savings");
  for (auto* sub : {eval, compare}) {
    sub->add_option("--cases", s.cases_file, "Case file (JSON Lines)");
    sub->add_option("--cutoffs", s.cutoffs, "Rank cutoffs for accuracy and MRR")->delimiter(',')->capture_default_str();
    sub->add_option("--out", s.out_base, "Report base path (<base>.json and <base>.txt)");
  }
  for (auto* sub : {ingest, compress, index, retrieve, answer, rerank_cmd, eval, compare}) add_shared_options(*sub, s);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (!s.config.empty()) apply_config_file(*sub, s.config);
    const auto resolved = resolve(s);
    const auto& name = sub->get_name();
    if (name == "ingest") return cmd_ingest(s, in, out);
    if (name == "compress") return cmd_compress(s, resolved, out, err);
    if (name == "index") return cmd_index(s, resolved, out);
    if (name == "retrieve") return cmd_retrieve(s, resolved, out);
    if (name == "answer") return cmd_answer(s, resolved, in, out);
    if (name == "rerank") return cmd_rerank(s, resolved, in, out);
    if (name == "eval") return cmd_eval(s, resolved, out);
    return cmd_compare(s, resolved, out);
  } catch (const MissingArtifactError& e) {
    err << "error: missing prerequisite: " << e.what() << "\n";
    return kMissingPrerequisite;
  } catch (const StateError& e) {
    err << "error: " << e.what() << "\n";
    return kMissingPrerequisite;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const BackendError& e) {
    err << "error: backend: " << e.what() << "\n";
    return kBackendError;
  } catch (const EmptyGenerationError& e) {
    err << "error: backend: " << e.what() << "\n";
    return kBackendError;
  } catch (const FormatError& e) {
    err << "error: backend output: " << e.what() << "\n";
    return kBackendError;
  } catch (const ContractError& e) {
    err << "error: backend: " << e.what() << "\n";
    return kBackendError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace qcomp::cli
