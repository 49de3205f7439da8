#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "causal/corpus.hpp"

using namespace causal::corpus;

namespace {

const std::string kData = CAUSAL_TEST_DATA;

ParsedCorpus parse(const std::string& s, bool has_gold = true) {
  std::istringstream in(s);
  return parse_corpus(in, has_gold);
}

}  // namespace

TEST(ParseCorpus, ConduentRow) {
  const auto parsed = load_corpus(kData + "/table1_example5.csv", true);
  ASSERT_EQ(parsed.segments.size(), 1u);
  EXPECT_TRUE(parsed.warnings.empty());
  const auto& s = parsed.segments[0];
  EXPECT_EQ(s.id, "0001");
  EXPECT_EQ(s.text,
            "Conduent has a consensus target price of $12.64, suggesting a potential upside of 80.87%.");
  ASSERT_TRUE(s.gold);
  EXPECT_EQ(s.gold->cause, "Conduent has a consensus target price of $12.64");
  EXPECT_EQ(s.gold->effect, "a potential upside of 80.87%.");
}

TEST(ParseCorpus, HeaderOnlyIsEmpty) {
  const auto parsed = load_corpus(kData + "/header_only.csv", true);
  EXPECT_TRUE(parsed.segments.empty());
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(ParseCorpus, ShortRowIsSkippedWithWarning) {
  const auto parsed = load_corpus(kData + "/three_rows_defect.csv", true);
  ASSERT_EQ(parsed.segments.size(), 2u);
  EXPECT_EQ(parsed.segments[0].id, "r1");
  EXPECT_EQ(parsed.segments[1].id, "r3");
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_EQ(parsed.warnings[0].kind, WarningKind::WrongColumnCount);
  EXPECT_EQ(parsed.warnings[0].line, 3u);
}

TEST(ParseCorpus, MissingHeaderThrows) {
  try {
    parse("0001; a; b; c\n");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.kind(), CorpusError::Kind::MissingHeader);
  }
}

TEST(ParseCorpus, NoUsableRowThrows) {
  try {
    parse("Index; Text; Cause; Effect\n1; only two\n");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.kind(), CorpusError::Kind::NoParsableRows);
  }
}

TEST(ParseCorpus, QuotedFieldsAndBom) {
  const auto parsed = parse(
      "\xEF\xBB\xBFIndex; Text; Cause; Effect\n"
      "7; \"Rates rose; stocks \"\"fell\"\"\nsharply.\"; Rates rose; \"stocks \"\"fell\"\"\"\n");
  ASSERT_EQ(parsed.segments.size(), 1u);
  EXPECT_EQ(parsed.segments[0].text, "Rates rose; stocks \"fell\"\nsharply.");
  EXPECT_EQ(parsed.segments[0].gold->effect, "stocks \"fell\"");
}

TEST(ParseCorpus, UnterminatedQuoteWarns) {
  const auto parsed = parse("Index; Text; Cause; Effect\n1; \"open text; a; b\n");
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_EQ(parsed.warnings[0].kind, WarningKind::UnterminatedQuote);
}

TEST(ParseCorpus, EmptyGoldFieldIsSkipped) {
  const auto parsed = parse("Index; Text; Cause; Effect\n1; t; ; e\n2; t u; t; u\n");
  ASSERT_EQ(parsed.segments.size(), 1u);
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_EQ(parsed.warnings[0].kind, WarningKind::EmptyGoldField);
}

TEST(ParseCorpus, WithoutGoldColumns) {
  const auto parsed = parse("Index; Text\n1; Some text.\n", false);
  ASSERT_EQ(parsed.segments.size(), 1u);
  EXPECT_FALSE(parsed.segments[0].gold);
}

TEST(Predictions, BlankFieldsAreLegalAndSilent) {
  // Shape written by an external span tagger: rows without a span are blank.
  std::istringstream in(
      "Index; Text; Cause; Effect\n"
      "1; Rates rose, stocks fell.; Rates rose,; stocks fell.\n"
      "2; Nothing here.; ; \n"
      "3; Only an effect.; ; Only an effect.\n");
  const auto parsed = parse_predictions(in);
  EXPECT_TRUE(parsed.warnings.empty());
  ASSERT_EQ(parsed.predictions.size(), 3u);
  EXPECT_EQ(parsed.predictions[1].cause, "");
  EXPECT_EQ(parsed.predictions[1].effect, "");
  EXPECT_EQ(parsed.predictions[2].effect, "Only an effect.");
}

TEST(Predictions, WriteThenReadRoundTrips) {
  std::mt19937 rng(7);
  const std::vector<std::string> alphabet = {"a", "b", " ", ";", "\"", "\n", "\r", "'", "é", ".", ","};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Prediction> rows;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      auto field = [&](bool allow_empty) {
        std::string s;
        const int len = static_cast<int>(rng() % 8) + (allow_empty ? 0 : 1);
        for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
        // the reader trims field edges, so keep edges non-blank
        while (!s.empty() && (s.front() == ' ' || s.front() == '\n' || s.front() == '\r')) s.erase(0, 1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\r')) s.pop_back();
        if (s.empty() && !allow_empty) s = "x";
        return s;
      };
      rows.push_back({"id" + std::to_string(i), field(false), field(true), field(true)});
    }
    std::ostringstream out;
    write_predictions(out, rows);
    std::istringstream in(out.str());
    const auto back = parse_predictions(in);
    EXPECT_TRUE(back.warnings.empty()) << out.str();
    EXPECT_EQ(back.predictions, rows) << out.str();
  }
}

TEST(Validate, ConduentBothSubstrings) {
  const auto s = load_corpus(kData + "/table1_example5.csv", true).segments.at(0);
  const auto v = validate_segment(s);
  EXPECT_TRUE(v.cause_is_substring);
  EXPECT_TRUE(v.effect_is_substring);
}

TEST(Validate, IdentityAndCaseSensitivity) {
  Segment s{"1", "Rates rose, stocks fell.", GoldPair{"Rates rose, stocks fell.", "stocks fell."}};
  EXPECT_TRUE(validate_segment(s).cause_is_substring);
  s.gold->cause = "rates rose";
  EXPECT_FALSE(validate_segment(s).cause_is_substring);
  s.gold.reset();
  EXPECT_THROW(validate_segment(s), CorpusError);
}

TEST(Stats, SingleRow) {
  const std::vector<Segment> rows = {{"1", "a b c", std::nullopt}};
  const auto st = compute_stats(rows);
  EXPECT_EQ(st.n_documents, 1u);
  EXPECT_EQ(st.n_duplicates, 0u);
  EXPECT_DOUBLE_EQ(st.doc_len.avg, 3.0);
  EXPECT_EQ(st.doc_len.min, 3u);
  EXPECT_EQ(st.doc_len.max, 3u);
  EXPECT_FALSE(st.cause_len);
}

TEST(Stats, ThreeRowsWithSharedText) {
  const auto st = compute_stats(load_corpus(kData + "/stats3.csv", true).segments);
  EXPECT_EQ(st.n_documents, 3u);
  EXPECT_EQ(st.n_duplicates, 1u);
  EXPECT_NEAR(st.doc_len.avg, 5.33, 0.01);
  EXPECT_EQ(st.doc_len.min, 4u);
  EXPECT_EQ(st.doc_len.max, 6u);
}

TEST(Stats, TenRowFixture) {
  const auto st = compute_stats(load_corpus(kData + "/fixture10.csv", true).segments);
  EXPECT_EQ(st.n_documents, 10u);
  EXPECT_EQ(st.n_duplicates, 2u);
  EXPECT_DOUBLE_EQ(st.doc_len.avg, 28.9);
  EXPECT_EQ(st.doc_len.min, 9u);
  EXPECT_EQ(st.doc_len.max, 44u);
  ASSERT_TRUE(st.cause_len && st.effect_len);
  EXPECT_DOUBLE_EQ(st.cause_len->avg, 11.1);
  EXPECT_EQ(st.cause_len->min, 6u);
  EXPECT_EQ(st.cause_len->max, 19u);
  EXPECT_DOUBLE_EQ(st.effect_len->avg, 8.6);
  EXPECT_EQ(st.effect_len->min, 2u);
  EXPECT_EQ(st.effect_len->max, 22u);
}

TEST(Stats, PermutationInvariant) {
  auto rows = load_corpus(kData + "/fixture10.csv", true).segments;
  const auto base = compute_stats(rows);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto st = compute_stats(rows);
    EXPECT_EQ(st.n_duplicates, base.n_duplicates);
    EXPECT_DOUBLE_EQ(st.doc_len.avg, base.doc_len.avg);
    EXPECT_EQ(st.doc_len.max, base.doc_len.max);
  }
}

TEST(Stats, EmptyCorpusThrows) {
  EXPECT_THROW(compute_stats(std::vector<Segment>{}), CorpusError);
}
