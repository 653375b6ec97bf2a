#include <gtest/gtest.h>

#include "csv.hpp"
#include "text_util.hpp"

using namespace qcomp::detail;

TEST(Csv, EscapesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, ParsesQuotedFields) {
  const auto rows = csv_parse("doc_id,kind,text\r\nd1,query,\"a, b\"\nd2,technical,\"multi\nline\"\n\n");
  ASSERT_TRUE(rows.has_value());
  ASSERT_EQ(rows->size(), 3u);
  EXPECT_EQ((*rows)[1][2], "a, b");
  EXPECT_EQ((*rows)[2][2], "multi\nline");
}

TEST(Csv, RejectsBrokenQuoting) {
  EXPECT_FALSE(csv_parse("a,\"unterminated\n").has_value());
  EXPECT_FALSE(csv_parse("a,b\"c\n").has_value());
}

TEST(Csv, LineRoundTrip) {
  const CsvRow row = {"d,1", "query", "He said \"x\"", ""};
  const auto rows = csv_parse(csv_line(row));
  ASSERT_TRUE(rows.has_value());
  EXPECT_EQ(rows->at(0), row);
}

TEST(TextUtil, Utf8) {
  EXPECT_TRUE(valid_utf8("caf\xC3\xA9"));
  EXPECT_FALSE(valid_utf8("\xC3"));
  EXPECT_FALSE(valid_utf8("\xFF"));
  EXPECT_EQ(utf8_length("caf\xC3\xA9"), 4u);
}

TEST(TextUtil, FileNameEncodingRoundTrips) {
  for (const char* id : {"2401.00001", "a/b", "..", "x%y", "with space", "arXiv:1234"}) {
    const auto enc = encode_file_name(id);
    EXPECT_EQ(enc.find('/'), std::string::npos) << id;
    EXPECT_NE(enc, "..");
    EXPECT_EQ(decode_file_name(enc), id);
  }
}
