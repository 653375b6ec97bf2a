#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "qcomp/compression.hpp"
#include "qcomp/error.hpp"

using namespace qcomp;

namespace {

DeterministicStub fixed(std::string out) {
  return DeterministicStub([out](std::string_view, const GenerationParams&) { return out; });
}

std::vector<Section> one_section(SectionKind kind, std::string text = "We propose a method.") {
  return {Section{kind, "Heading", std::move(text), 0}};
}

QuestionSet sample_questions() {
  QuestionSet qs;
  qs.doc_id = "p1";
  qs.technical = {{"What retrieval method do the authors use?", 1}};
  qs.conceptual = {{"Why does compression help?", 2}};
  return qs;
}

Document sample_doc() {
  return ingest_document("Introduction\nWe compress papers.\nConclusion\nIt works.",
                         {{"id", "p1"}, {"authors", "A; B"}, {"platform", "arXiv"}, {"date", "2024-05-01"}});
}

}  // namespace

TEST(Questions, StubEchoWithMarker) {
  auto stub = fixed("Q: what method? ");
  const auto qs = generate_questions("d", one_section(SectionKind::Methodology), stub, GenerationParams{}, {1, 1});
  ASSERT_EQ(qs.technical.size(), 1u);
  EXPECT_EQ(qs.technical[0].text, "what method?");
  EXPECT_EQ(qs.conceptual.size(), 1u);
}

TEST(Questions, EmptyOutputRaises) {
  auto stub = fixed("");
  EXPECT_THROW(generate_questions("d", one_section(SectionKind::Methodology), stub, GenerationParams{}, {1, 1}),
               EmptyGenerationError);
}

TEST(Questions, TruncatesToCounts) {
  int calls = 0;
  DeterministicStub stub([&](std::string_view, const GenerationParams&) {
    ++calls;
    std::string out;
    for (int i = 0; i < 3; ++i) out += "question " + std::to_string(calls) + "." + std::to_string(i) + "?\n";
    return out;
  });
  std::vector<Section> sections = {{SectionKind::Introduction, "Introduction", "a.", 0},
                                   {SectionKind::Conclusion, "Conclusion", "b.", 1}};
  const auto qs = generate_questions("d", sections, stub, GenerationParams{}, {2, 2});
  EXPECT_EQ(qs.technical.size(), 2u);
  EXPECT_EQ(qs.conceptual.size(), 2u);
}

TEST(Questions, DeduplicatesAndMapsSections) {
  auto stub = fixed("same?\nsame?\n");
  const auto qs = generate_questions("d", one_section(SectionKind::Discussion), stub, GenerationParams{}, {3, 3});
  EXPECT_EQ(qs.technical.size(), 1u);
  EXPECT_EQ(qs.technical[0].section_order, 0u);
}

TEST(Questions, BackendErrorPropagates) {
  DeterministicStub stub([](std::string_view, const GenerationParams&) -> std::string { throw BackendError("down"); });
  EXPECT_THROW(generate_questions("d", one_section(SectionKind::Methodology), stub, GenerationParams{}, {1, 1}),
               BackendError);
}

TEST(Queries, SingleRow) {
  auto stub = fixed("q1,retrieval with question anchors");
  QuestionSet qs;
  qs.doc_id = "d";
  qs.technical = {{"How does retrieval with anchors work?", 0}};
  const auto qu = generate_queries(qs, KeywordSet{}, stub, GenerationParams{});
  ASSERT_EQ(qu.queries.size(), 1u);
  EXPECT_EQ(qu.queries[0].text, "retrieval with question anchors");
  EXPECT_EQ(qu.doc_id, "d");
}

TEST(Queries, ThreeRows) {
  auto stub = fixed("1,alpha method\n2,beta method\n3,\"gamma, delta\"\n");
  QuestionSet qs;
  qs.technical = {{"a?", 0}, {"b?", 1}, {"c?", 2}};
  const auto qu = generate_queries(qs, KeywordSet{}, stub, GenerationParams{});
  ASSERT_EQ(qu.queries.size(), 3u);
  EXPECT_EQ(qu.queries[2].text, "gamma, delta");
  EXPECT_EQ(qu.queries[1].section_order, 1u);
}

TEST(Queries, MalformedBytesRaiseFormatError) {
  auto stub = fixed("\xFF\xFE\x01");
  QuestionSet qs;
  qs.technical = {{"a?", 0}};
  try {
    generate_queries(qs, KeywordSet{}, stub, GenerationParams{});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.raw_output(), "\xFF\xFE\x01");
  }
}

TEST(Keywords, FromQuestions) {
  const auto kw = identify_keywords(sample_questions(), LexiconTagger{});
  EXPECT_EQ(kw.doc_id, "p1");
  ASSERT_FALSE(kw.keywords.empty());
  for (const auto& k : kw.keywords) {
    EXPECT_NE(k, "do");
    for (char c : k) EXPECT_FALSE(c >= 'A' && c <= 'Z');
  }
}

TEST(Truncate, WordLimit) {
  std::string text;
  for (int i = 0; i < 600; ++i) text += "word" + std::to_string(i) + " ";
  const auto t = truncate_to_limit(text, {CardLimitUnit::Words, 300});
  EXPECT_EQ(measure(t, CardLimitUnit::Words), 300u);
  EXPECT_EQ(text.rfind(t, 0), 0u);
  EXPECT_EQ(text[t.size()], ' ');
}

TEST(Truncate, CharacterLimitNeverSplitsWords) {
  const auto t = truncate_to_limit("alpha beta gamma", {CardLimitUnit::Characters, 12});
  EXPECT_EQ(t, "alpha beta");
}

TEST(Card, LimitAndMetadata) {
  auto stub = fixed("TOPICS:\n- compression\nKEY FINDINGS:\n- it works\n");
  const auto card = build_paper_card(sample_doc(), sample_questions(), QuerySet{}, stub, GenerationParams{}, {});
  EXPECT_LE(measure(card.body, CardLimitUnit::Words), 300u);
  EXPECT_EQ(card.topics, (std::vector<std::string>{"compression"}));
  EXPECT_EQ(card.key_findings, (std::vector<std::string>{"it works"}));
  EXPECT_EQ(card.metadata.authors, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(card.metadata.id_or_doi, "p1");
}

TEST(Card, LongBodyTruncated) {
  std::string raw = "TOPICS:\n";
  for (int i = 0; i < 600; ++i) raw += "- t" + std::to_string(i) + "\n";
  auto stub = fixed(raw + "KEY FINDINGS:\n- f\n");
  const auto card = build_paper_card(sample_doc(), sample_questions(), QuerySet{}, stub, GenerationParams{}, {});
  EXPECT_LE(measure(card.body, CardLimitUnit::Words), 300u);
  EXPECT_LE(serialize_card(card).size(), kMaxCardBytes);
}

TEST(Card, OversizedLimitOverflows) {
  std::string raw = "TOPICS:\n";
  for (int i = 0; i < 3000; ++i) raw += "- topic" + std::to_string(i) + "\n";
  auto stub = fixed(raw);
  EXPECT_THROW(
      build_paper_card(sample_doc(), sample_questions(), QuerySet{}, stub, GenerationParams{}, {CardLimitUnit::Words, 5000}),
      CardOverflowError);
}

TEST(Card, SerializeParseRoundTrip) {
  auto stub = fixed("TOPICS:\n- a\n- b\nKEY FINDINGS:\n- c\n");
  const auto card = build_paper_card(sample_doc(), sample_questions(), QuerySet{}, stub, GenerationParams{}, {});
  const auto back = parse_card(serialize_card(card), card.doc_id);
  EXPECT_EQ(back.topics, card.topics);
  EXPECT_EQ(back.key_findings, card.key_findings);
  EXPECT_EQ(back.metadata.authors, card.metadata.authors);
  EXPECT_EQ(serialize_card(back), serialize_card(card));
}

TEST(Templates, RenderAndDefaultsLoad) {
  EXPECT_EQ(render_template("a {x} b {y} {x}", {{"x", "1"}, {"y", "2"}}), "a 1 b 2 1");
  fixtures::ScratchDir dir("prompts");
  std::ofstream(dir / "query.txt") << "custom {questions}";
  const auto t = PromptTemplates::load_dir(dir.path().string());
  EXPECT_EQ(t.query, "custom {questions}");
  EXPECT_EQ(t.card, PromptTemplates::defaults().card);
}

TEST(Persist, ZeroDocuments) {
  fixtures::ScratchDir dir("persist0");
  const auto m = persist_artifacts({}, dir / "out");
  EXPECT_TRUE(m.empty());
  EXPECT_EQ(m.logical_records(), 0u);
}

TEST(Persist, UnwritableDirectory) {
  fixtures::ScratchDir dir("persist_ro");
  std::ofstream(dir / "blocker") << "x";
  DeterministicStub stub;
  const auto arts = compress_corpus(fixtures::planted_corpus(1), stub, LexiconTagger{}, CompressionOptions{});
  EXPECT_THROW(persist_artifacts(arts, (dir.path() / "blocker" / "sub").string()), StorageError);
}

TEST(Persist, RoundTripAndAccounting) {
  fixtures::ScratchDir dir("persist");
  DeterministicStub stub;
  const auto docs = fixtures::planted_corpus(3);
  const auto arts = compress_corpus(docs, stub, LexiconTagger{}, CompressionOptions{});
  const auto m = persist_artifacts(arts, dir.path().string());
  EXPECT_EQ(m.documents.size(), 3u);
  EXPECT_EQ(m.logical_records(), 6u);
  std::size_t cards = 0;
  for (const auto& f : m.files) {
    if (f.path.ends_with(".md")) ++cards;
    EXPECT_EQ(std::filesystem::file_size(dir / f.path), f.bytes);
  }
  EXPECT_EQ(cards, 3u);
  const auto back = load_artifacts(dir.path().string());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].questions.technical, arts[i].questions.technical);
    EXPECT_EQ(back[i].queries.queries, arts[i].queries.queries);
    EXPECT_EQ(serialize_card(back[i].card), serialize_card(arts[i].card));
  }
}

TEST(Persist, MissingManifest) {
  fixtures::ScratchDir dir("nomanifest");
  EXPECT_THROW(load_artifacts(dir.path().string()), MissingArtifactError);
}

TEST(Pipeline, StubIsDeterministic) {
  const auto docs = fixtures::planted_corpus(2);
  DeterministicStub a, b;
  CompressionOptions opts;
  opts.jobs = 2;
  const auto x = compress_corpus(docs, a, LexiconTagger{}, opts);
  const auto y = compress_corpus(docs, b, LexiconTagger{}, opts);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(serialize_card(x[i].card), serialize_card(y[i].card));
}
