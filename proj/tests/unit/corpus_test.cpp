#include <gtest/gtest.h>

#include <sstream>

#include "qcomp/corpus.hpp"
#include "qcomp/error.hpp"

using namespace qcomp;

namespace {

std::string words_text(std::size_t n, std::string_view stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += std::string(stem) + std::to_string(i);
  }
  return s;
}

Document doc_of(const std::string& text) { return ingest_document(text, {{"id", "d"}}); }

}  // namespace

TEST(Tokenize, SplitsOnHyphensAndCommas) {
  EXPECT_EQ(tokenize_words("state-of-the-art, models"),
            (std::vector<std::string>{"state", "of", "the", "art", "models"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize_words("").empty()); }

TEST(Tokenize, StripsEdgePunctuationKeepsCase) {
  EXPECT_EQ(tokenize_words("BM25 scores."), (std::vector<std::string>{"BM25", "scores"}));
  EXPECT_EQ(tokenize_words("(\"quoted\") ... e.g."), (std::vector<std::string>{"quoted", "e.g"}));
}

TEST(Tokenize, OffsetsPointIntoSource) {
  const std::string text = "  alpha, beta-gamma. ";
  for (const auto& t : tokenize_with_offsets(text)) EXPECT_EQ(text.substr(t.begin, t.end - t.begin), t.text);
}

TEST(Ingest, TwoHeadedSections) {
  const auto d = ingest_document("Introduction\nWe study X.\nConclusion\nX works.", {{"id", "p1"}});
  ASSERT_EQ(d.sections.size(), 2u);
  EXPECT_EQ(d.sections[0].kind, SectionKind::Introduction);
  EXPECT_EQ(d.sections[1].kind, SectionKind::Conclusion);
  EXPECT_EQ(d.id, "p1");
}

TEST(Ingest, MissingIdRejected) { EXPECT_THROW(ingest_document("hello", {}), InputError); }

TEST(Ingest, EmptyRawRejected) { EXPECT_THROW(ingest_document("", {{"id", "x"}}), InputError); }

TEST(Ingest, NoHeadingsFallsBackToOneOtherSection) {
  const auto d = ingest_document("no headings at all", {{"id", "p2"}});
  ASSERT_EQ(d.sections.size(), 1u);
  EXPECT_EQ(d.sections[0].kind, SectionKind::Other);
  EXPECT_NE(d.sections[0].text.find("no headings at all"), std::string::npos);
}

TEST(Ingest, NormalizesLineEndingsAndMapsMetadata) {
  const auto d = ingest_document("Abstract\r\nShort.\r\n",
                                 {{"id", "x"}, {"title", "T"}, {"doi", "10.1/x"}, {"platform", "arXiv"}});
  EXPECT_EQ(d.full_text.find('\r'), std::string::npos);
  EXPECT_EQ(d.title, "T");
  ASSERT_TRUE(d.doi.has_value());
  EXPECT_EQ(*d.doi, "10.1/x");
  EXPECT_EQ(d.platform, "arXiv");
}

TEST(Sections, NumberedHeadings) {
  const auto s = extract_sections("1 Introduction\nText one.\n3 Methodology\nText two.\n6 Conclusion\nText three.");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].kind, SectionKind::Introduction);
  EXPECT_EQ(s[1].kind, SectionKind::Methodology);
  EXPECT_EQ(s[2].kind, SectionKind::Conclusion);
}

TEST(Sections, UnknownHeadingIsOther) {
  const auto s = extract_sections("Results\nNumbers went up.");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].kind, SectionKind::Other);
  EXPECT_EQ(s[0].heading, "Results");
}

TEST(Sections, KindPrefixes) {
  const auto s = extract_sections(
      "Abstract\na.\n2.1 Approach Overview\nb.\nMethods\nc.\nDiscussion\nd.\nConclusions And Future Work\ne.");
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0].kind, SectionKind::Abstract);
  EXPECT_EQ(s[1].kind, SectionKind::Methodology);
  EXPECT_EQ(s[2].kind, SectionKind::Methodology);
  EXPECT_EQ(s[3].kind, SectionKind::Discussion);
  EXPECT_EQ(s[4].kind, SectionKind::Conclusion);
}

TEST(Sections, SentencesAreNotHeadings) {
  EXPECT_FALSE(is_heading_line("We study X."));
  EXPECT_FALSE(is_heading_line("lowercase start"));
  EXPECT_FALSE(is_heading_line("This Heading Has Far Too Many Words To Count As One"));
  EXPECT_TRUE(is_heading_line("4.2 Related Work"));
  EXPECT_TRUE(is_heading_line("Introduction"));
}

TEST(Sections, PreambleAndOrder) {
  const std::string text = "Preamble line.\nIntroduction\nBody one.\nConclusion\nBody two.";
  const auto s = extract_sections(text);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].heading, "");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) EXPECT_GT(s[i].order, s[i - 1].order);
    const auto at = text.find(s[i].text, pos);
    ASSERT_NE(at, std::string::npos);
    pos = at;
  }
}

TEST(CorpusJsonl, ReadsValidLines) {
  std::istringstream in(
      R"({"id":"a","title":"A","authors":["X","Y"],"date":"2024-01-01","platform":"arXiv","doi":null,"text":"Introduction\nHello."})"
      "\n"
      R"({"id":"b","text":"plain"})"
      "\n"
      R"({"id":"c","text":"more","doi":"10.1/c"})"
      "\n");
  const auto docs = read_corpus_jsonl(in);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].authors, (std::vector<std::string>{"X", "Y"}));
  EXPECT_FALSE(docs[0].doi.has_value());
  EXPECT_EQ(docs[2].doi.value(), "10.1/c");
}

TEST(CorpusJsonl, MalformedLineCitesLineNumber) {
  std::istringstream in("{\"id\":\"a\",\"text\":\"x\"}\n{not json\n");
  try {
    read_corpus_jsonl(in);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CorpusJsonl, EmptyCorpus) {
  std::istringstream in("");
  try {
    read_corpus_jsonl(in);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(CorpusJsonl, DuplicateIdRejected) {
  std::istringstream in("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
  EXPECT_THROW(read_corpus_jsonl(in), InputError);
}

TEST(CorpusJsonl, RoundTrip) {
  std::istringstream in(R"({"id":"a","title":"A","authors":["X"],"date":"d","platform":"p","doi":"10/x","text":"Abstract\nBody."})"
                        "\n");
  const auto docs = read_corpus_jsonl(in);
  std::ostringstream out;
  write_corpus_jsonl(out, docs);
  std::istringstream again(out.str());
  const auto docs2 = read_corpus_jsonl(again);
  ASSERT_EQ(docs2.size(), 1u);
  EXPECT_EQ(docs2[0].full_text, docs[0].full_text);
  EXPECT_EQ(docs2[0].doi, docs[0].doi);
  std::ostringstream out2;
  write_corpus_jsonl(out2, docs2);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(ChunkFixed, ExactMultiple) {
  ChunkConfig cfg;
  const auto chunks = chunk_fixed(doc_of(words_text(700)), cfg);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(tokenize_words(chunks[0].text).size(), 350u);
  EXPECT_EQ(tokenize_words(chunks[1].text).size(), 350u);
}

TEST(ChunkFixed, ShortDocument) {
  const auto chunks = chunk_fixed(doc_of(words_text(10)), ChunkConfig{});
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].word_span, (std::pair<std::size_t, std::size_t>{0, 10}));
}

TEST(ChunkFixed, Overlap) {
  ChunkConfig cfg;
  cfg.overlap_words = 50;
  const auto chunks = chunk_fixed(doc_of(words_text(400)), cfg);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].word_span, (std::pair<std::size_t, std::size_t>{0, 350}));
  EXPECT_EQ(chunks[1].word_span, (std::pair<std::size_t, std::size_t>{300, 400}));
}

TEST(ChunkConfig, Validation) {
  ChunkConfig cfg;
  cfg.size_words = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.size_words = 10;
  cfg.overlap_words = 10;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(ChunkRecursive, NoSplitNeeded) {
  ChunkConfig cfg;
  cfg.strategy = ChunkStrategy::Recursive;
  const auto chunks = chunk_recursive(doc_of(words_text(100, "a") + "\n\n" + words_text(100, "b")), cfg);
  EXPECT_EQ(chunks.size(), 1u);
}

TEST(ChunkRecursive, ParagraphBreakFirst) {
  ChunkConfig cfg;
  cfg.strategy = ChunkStrategy::Recursive;
  const auto chunks = chunk_recursive(doc_of(words_text(300, "a") + "\n\n" + words_text(300, "b")), cfg);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].word_span, (std::pair<std::size_t, std::size_t>{0, 300}));
  EXPECT_EQ(chunks[1].word_span, (std::pair<std::size_t, std::size_t>{300, 600}));
}

TEST(ChunkRecursive, WordBreakFallback) {
  ChunkConfig cfg;
  cfg.strategy = ChunkStrategy::Recursive;
  const auto chunks = chunk_recursive(doc_of(words_text(500) + "."), cfg);
  ASSERT_EQ(chunks.size(), 2u);
  for (const auto& c : chunks) EXPECT_LE(c.word_span.second - c.word_span.first, 350u);
}

TEST(ChunkRecursive, SentenceLevelSplit) {
  ChunkConfig cfg;
  cfg.strategy = ChunkStrategy::Recursive;
  cfg.size_words = 20;
  std::string text;
  for (int s = 0; s < 6; ++s) text += words_text(8, "s" + std::to_string(s)) + ". ";
  const auto chunks = chunk_recursive(doc_of(text), cfg);
  ASSERT_EQ(chunks.size(), 3u);
  for (const auto& c : chunks) {
    EXPECT_EQ(c.word_span.second - c.word_span.first, 16u);
    EXPECT_EQ(c.text.back(), '.');
  }
}

TEST(ChunkDocument, DispatchesOnStrategy) {
  ChunkConfig cfg;
  cfg.size_words = 5;
  const auto d = doc_of(words_text(12));
  EXPECT_EQ(chunk_document(d, cfg).size(), 3u);
  cfg.strategy = ChunkStrategy::Recursive;
  EXPECT_EQ(chunk_document(d, cfg).size(), chunk_recursive(d, cfg).size());
}

TEST(ChunkDump, JsonlFields) {
  std::ostringstream out;
  write_chunks_jsonl(out, chunk_fixed(doc_of(words_text(3)), ChunkConfig{}));
  EXPECT_EQ(out.str(), "{\"doc_id\":\"d\",\"index\":0,\"text\":\"w0 w1 w2\"}\n");
}
