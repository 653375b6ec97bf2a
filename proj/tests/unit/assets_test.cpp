#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "qcomp/compression.hpp"
#include "qcomp/lexical.hpp"
#include "qcomp/retrieval.hpp"

using namespace qcomp;

namespace {

std::string asset(const std::string& rel) {
  std::ifstream in(std::string(QCOMP_ASSET_DIR) + "/" + rel, std::ios::binary);
  EXPECT_TRUE(in.good()) << rel;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Assets, PromptDefaultsMatchFiles) {
  const auto d = PromptTemplates::defaults();
  EXPECT_EQ(d.question_technical, asset("prompts/question_technical.txt"));
  EXPECT_EQ(d.question_conceptual, asset("prompts/question_conceptual.txt"));
  EXPECT_EQ(d.query, asset("prompts/query.txt"));
  EXPECT_EQ(d.card, asset("prompts/card.txt"));
  EXPECT_EQ(default_multihop_template(), asset("prompts/multihop.txt"));
  EXPECT_EQ(PromptTemplates::load_dir(std::string(QCOMP_ASSET_DIR) + "/prompts").card, d.card);
}

TEST(Assets, LexiconDefaultsMatchFiles) {
  const auto adp = read_lexicon_file(std::string(QCOMP_ASSET_DIR) + "/lexicons/adp.txt");
  const auto cconj = read_lexicon_file(std::string(QCOMP_ASSET_DIR) + "/lexicons/cconj.txt");
  EXPECT_EQ(std::set<std::string>(default_adp_lexicon().begin(), default_adp_lexicon().end()), adp);
  EXPECT_EQ(std::set<std::string>(default_cconj_lexicon().begin(), default_cconj_lexicon().end()), cconj);
  EXPECT_TRUE(adp.count("for"));
  EXPECT_TRUE(cconj.count("and"));
}

TEST(Assets, TemplatePlaceholders) {
  const auto d = PromptTemplates::defaults();
  EXPECT_NE(d.question_technical.find("{section_text}"), std::string::npos);
  EXPECT_NE(d.query.find("{questions}"), std::string::npos);
  EXPECT_NE(d.card.find("{sections}"), std::string::npos);
  const auto mh = default_multihop_template();
  EXPECT_NE(mh.find("{context}"), std::string::npos);
  EXPECT_NE(mh.find("{input}"), std::string::npos);
}
