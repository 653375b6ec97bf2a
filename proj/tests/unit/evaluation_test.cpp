#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "qcomp/error.hpp"
#include "qcomp/evaluation.hpp"
#include "squad_f1_reference.hpp"

using namespace qcomp;

namespace {

std::vector<RankedResult> ranked(const std::vector<std::string>& ids) {
  std::vector<RankedResult> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], 1.0 / (i + 1), i + 1});
  return out;
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w ";
  return s;
}

}  // namespace

TEST(Metrics, RecallAndMrr) {
  const auto r = ranked({"a", "b", "c"});
  EXPECT_EQ(recall_at_k(r, "b", 3), 1.0);
  EXPECT_EQ(recall_at_k(r, "c", 2), 0.0);
  EXPECT_EQ(mrr_at_k(r, "b", 3), 0.5);
  EXPECT_EQ(mrr_at_k(r, "z", 3), 0.0);
  EXPECT_EQ(accuracy_at_k(r, "a", 1), recall_at_k(r, "a", 1));
}

TEST(Metrics, AggregateMrr) {
  const double mean = (mrr_at_k(ranked({"g", "x"}), "g", 3) + mrr_at_k(ranked({"x", "y", "z"}), "g", 3)) / 2;
  EXPECT_DOUBLE_EQ(mean, 0.5);
}

TEST(Metrics, MrrNeverExceedsRecall) {
  const auto r = ranked({"a", "b", "c", "d", "e"});
  for (const char* g : {"a", "c", "e", "q"})
    for (std::size_t k = 1; k <= 5; ++k) EXPECT_LE(mrr_at_k(r, g, k), recall_at_k(r, g, k));
}

TEST(F1, Examples) {
  EXPECT_DOUBLE_EQ(token_f1("The Eiffel Tower", {"eiffel tower"}), 1.0);
  EXPECT_DOUBLE_EQ(token_f1("Paris", {"London"}), 0.0);
  EXPECT_NEAR(token_f1("the big red barn", {"red barn"}), 2 * (2.0 / 3) * 1.0 / (2.0 / 3 + 1.0), 1e-12);
  EXPECT_DOUBLE_EQ(token_f1("", {""}), 1.0);
  EXPECT_DOUBLE_EQ(token_f1("x", {"y", "x"}), 1.0);
}

TEST(F1, MatchesSquadReference) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"An apple, a day!", {"apple day", "an orange"}},
      {"Barack Obama was president", {"Obama"}},
      {"1990s rock-and-roll", {"rock and roll 1990s"}},
      {"the the the", {"the"}},
      {"New York City", {"new york", "NYC"}}};
  for (const auto& [pred, golds] : cases) EXPECT_NEAR(token_f1(pred, golds), oracle::squad_f1_max(pred, golds), 1e-12) << pred;
}

TEST(F1, Normalization) { EXPECT_EQ(normalize_answer("The  Quick, brown fox!"), "quick brown fox"); }

TEST(Buckets, Boundaries) {
  EXPECT_EQ(length_bucket_for(words(3999)), LengthBucket::W0to4k);
  EXPECT_EQ(length_bucket_for(words(4000)), LengthBucket::W4to8k);
  EXPECT_EQ(length_bucket_for(words(8000)), LengthBucket::Other);
}

TEST(QueryClass, Aliases) {
  EXPECT_EQ(query_class_from_string("v2"), QueryClass::Technical);
  EXPECT_EQ(query_class_from_string("v3"), QueryClass::Conceptual);
  EXPECT_THROW(query_class_from_string("v9"), InputError);
}

TEST(SingleHopBenchmark, ReportShapeAndSkips) {
  DeterministicStub gen;
  HashStubEmbedding emb(64);
  LexiconTagger tagger;
  const auto docs = fixtures::planted_corpus(3);
  const IndexBackends b{&gen, &emb, &tagger};
  const auto qc = build_index(docs, Strategy::QuestionCentric, b);
  const auto cards = build_index(docs, Strategy::Bm25Cards, b);
  std::vector<SingleHopCase> cases;
  for (const auto& a : qc.artifacts) {
    cases.push_back({a.doc_id + "-t", a.questions.technical[0].text, a.doc_id, QueryClass::Technical});
    cases.push_back({a.doc_id + "-c", a.questions.conceptual[0].text, a.doc_id, QueryClass::Conceptual});
  }
  cases.push_back({"ghost", "anything", "not-in-corpus", QueryClass::Technical});
  const auto report = run_single_hop_benchmark(cases, {Strategy::QuestionCentric, Strategy::Bm25Cards},
                                               {{Strategy::QuestionCentric, &qc}, {Strategy::Bm25Cards, &cards}},
                                               {3, 1}, RetrievalConfig{}, tagger, &emb);
  EXPECT_EQ(report.cells.size(), 2u * 2u * 2u);
  EXPECT_EQ(report.overall.size(), 2u * 2u);
  EXPECT_EQ(report.skipped_cases, (std::vector<std::string>{"ghost"}));
  for (const auto& c : report.cells) {
    EXPECT_EQ(c.cases, 3u);
    EXPECT_LE(c.mrr, c.accuracy);
  }
  for (std::size_t i = 1; i < report.cells.size(); ++i) {
    const auto& p = report.cells[i - 1];
    const auto& c = report.cells[i];
    EXPECT_LE(std::tie(p.strategy, p.query_class, p.cutoff), std::tie(c.strategy, c.query_class, c.cutoff));
  }
  EXPECT_EQ(report.metadata.at("skipped"), "1");
  const auto text = report_text(report);
  EXPECT_NE(text.find("question-centric"), std::string::npos);
  EXPECT_NE(report_json(report).find("\"cells\""), std::string::npos);
}

TEST(MultihopBenchmark, BucketsSumAndFailures) {
  LexiconTagger tagger;
  DeterministicStub gen([](std::string_view prompt, const GenerationParams&) -> std::string {
    if (prompt.find("explode") != std::string_view::npos) throw BackendError("boom");
    return "river";
  });
  std::vector<MultihopCase> cases = {{"a", "The river flows.\n\nA delta forms.", "Which river?", {"river"}},
                                     {"b", words(5000) + "\n\nriver text", "river?", {"lake"}},
                                     {"c", "explode here.\n\nriver", "explode river?", {"x"}}};
  for (auto& c : cases) c.length_bucket = length_bucket_for(c.context);
  const auto report = run_multihop_benchmark(cases, MultihopConfig{}, tagger, gen, 2);
  ASSERT_TRUE(report.multihop.has_value());
  const auto& m = *report.multihop;
  EXPECT_EQ(m.scored, 2u);
  EXPECT_EQ(m.failed, 1u);
  std::size_t total = 0;
  for (const auto& [name, b] : m.buckets) total += b.cases;
  EXPECT_EQ(total, m.scored);
  EXPECT_EQ(m.buckets.at("4k-8k").cases, 1u);
  EXPECT_DOUBLE_EQ(m.mean_f1, 0.5);
  EXPECT_TRUE(m.buckets.count("other"));
}

TEST(CaseReaders, SingleHopAndLongBench) {
  std::istringstream sh(R"({"query_id":"q1","query":"x","gold_doc_id":"d","query_class":"v3"})" "\n");
  const auto s = read_single_hop_cases(sh);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].query_class, QueryClass::Conceptual);
  std::istringstream lb(R"({"_id":"c1","context":"ctx","input":"q?","answers":["a","b"]})" "\n");
  const auto m = read_multihop_cases(lb);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].gold_answers.size(), 2u);
  std::istringstream bad("{}\nnot json\n");
  EXPECT_THROW(read_multihop_cases(bad), InputError);
}

TEST(Reports, WriteBothFormats) {
  fixtures::ScratchDir dir("reports");
  EvalReport r;
  r.task = "single-hop";
  r.metadata["k"] = "v";
  write_report(r, dir / "nested/report");
  EXPECT_TRUE(std::filesystem::exists(dir / "nested/report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "nested/report.txt"));
}
