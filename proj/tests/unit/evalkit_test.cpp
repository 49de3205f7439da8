#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "causal/corpus.hpp"
#include "causal/evalkit.hpp"
#include "oracles/metric_oracle.hpp"
#include "oracles/micro_corpus.hpp"

using namespace causal;
using namespace causal::evalkit;
using L = TokenLabel;

namespace {

const std::string kData = CAUSAL_TEST_DATA;

void split_rows(const std::vector<oracle::Row>& rows, std::vector<corpus::Prediction>& preds,
                std::vector<corpus::Segment>& golds) {
  for (const auto& r : rows) {
    preds.push_back({r.id, r.text, r.pred_cause, r.pred_effect});
    golds.push_back({r.id, r.text, corpus::GoldPair{r.gold_cause, r.gold_effect}});
  }
}

void expect_matches_oracle(const EvalReport& got, const oracle::Tally& want) {
  constexpr double kTol = 1e-9;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(got.per_class[k].precision, want.precision[k], kTol);
    EXPECT_NEAR(got.per_class[k].recall, want.recall[k], kTol);
    EXPECT_NEAR(got.per_class[k].f1, want.f1[k], kTol);
    EXPECT_EQ(got.per_class[k].support, want.support[k]);
    EXPECT_EQ(got.per_class[k].predicted, want.predicted[k]);
    EXPECT_EQ(got.per_class[k].true_positive, want.tp[k]);
  }
  EXPECT_NEAR(got.precision, want.w_precision, kTol);
  EXPECT_NEAR(got.recall, want.w_recall, kTol);
  EXPECT_NEAR(got.f1, want.w_f1, kTol);
  EXPECT_NEAR(got.exact_match, want.exact_match, kTol);
  EXPECT_EQ(got.n_tokens, want.n_tokens);
  EXPECT_EQ(got.n_parse_failed, want.n_parse_failed);
  EXPECT_EQ(got.n_not_grounded, want.n_not_grounded);
  EXPECT_EQ(got.n_overflow_cause, want.n_overflow_cause);
  EXPECT_EQ(got.n_overflow_effect, want.n_overflow_effect);
  EXPECT_EQ(got.n_swapped, want.n_swapped);
  EXPECT_EQ(got.n_label_conflicts, want.n_conflicts);
}

std::vector<oracle::Row> swap_fixture() {
  return {
      {"1", "Rates rose, so stocks fell.", "Rates rose,", "stocks fell.", "Rates rose,", "stocks fell."},
      {"2", "The bank cut rates and lending grew.", "The bank cut rates", "lending grew.",
       "lending grew.", "The bank cut rates"},
  };
}

}  // namespace

TEST(Labels, DisjointSpans) {
  const auto r = label_tokens("a b c d", text::Range{0, 3}, text::Range{6, 7});
  EXPECT_EQ(r.labels, (std::vector<L>{L::C, L::C, L::O, L::E}));
  EXPECT_EQ(r.conflicts, 0u);
}

TEST(Labels, NoSpansAllOutside) {
  EXPECT_EQ(label_tokens("a b c", std::nullopt, std::nullopt).labels,
            (std::vector<L>{L::O, L::O, L::O}));
}

TEST(Labels, StraddlingTokenFollowsOverlap) {
  // "abc" has two chars inside the cause span and one outside
  EXPECT_EQ(label_tokens("abc d", text::Range{0, 2}, std::nullopt).labels,
            (std::vector<L>{L::C, L::O}));
  // larger overlap wins, ties go to C
  auto r = label_tokens("abcd", text::Range{0, 1}, text::Range{1, 4});
  EXPECT_EQ(r.labels, (std::vector<L>{L::E}));
  EXPECT_EQ(r.conflicts, 1u);
  r = label_tokens("abcd", text::Range{0, 2}, text::Range{2, 4});
  EXPECT_EQ(r.labels, (std::vector<L>{L::C}));
}

TEST(Labels, OutOfBoundsThrows) {
  try {
    label_tokens("abc", text::Range{1, 9}, std::nullopt);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::SpanOutOfBounds);
  }
}

TEST(Labels, GroundedSpanOverload) {
  extract::GroundedSpan c{0, 1, "a", extract::MatchMethod::Exact, 0.0};
  EXPECT_EQ(token_labels("a b", c, std::nullopt), (std::vector<L>{L::C, L::O}));
}

TEST(Score, IdentityOnFixture) {
  const auto golds = corpus::load_corpus(kData + "/fixture10.csv", true).segments;
  std::vector<corpus::Prediction> preds;
  for (const auto& g : golds) preds.push_back(corpus::gold_as_prediction(g));
  const auto r = score(preds, golds);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.exact_match, 1.0);
  EXPECT_EQ(r.n_swapped, 0u);
}

TEST(Score, AllEmptyPredictions) {
  const auto golds = corpus::load_corpus(kData + "/fixture10.csv", true).segments;
  std::vector<corpus::Prediction> preds;
  for (const auto& g : golds) preds.push_back({g.id, g.text, "", ""});
  const auto r = score(preds, golds);
  EXPECT_EQ(r.exact_match, 0.0);
  EXPECT_EQ(r.of(L::C).f1, 0.0);
  EXPECT_EQ(r.of(L::E).f1, 0.0);
  const double o_share = double(r.of(L::O).support) / double(r.n_tokens);
  EXPECT_NEAR(r.f1, o_share * r.of(L::O).f1, 1e-12);
  EXPECT_NEAR(r.of(L::O).f1, 2 * o_share / (o_share + 1), 1e-12);
  EXPECT_EQ(r.n_parse_failed, golds.size());
}

TEST(Score, SwapFixture) {
  std::vector<corpus::Prediction> preds;
  std::vector<corpus::Segment> golds;
  split_rows(swap_fixture(), preds, golds);
  const auto r = score(preds, golds);
  EXPECT_EQ(r.exact_match, 0.5);
  EXPECT_EQ(r.n_swapped, 1u);
  // 12 tokens: row 1 all correct (2 C, 1 O, 2 E), row 2 C<->E swapped (4 C, 1 O, 2 E)
  EXPECT_EQ(r.n_tokens, 12u);
  EXPECT_EQ(r.of(L::C).support, 6u);
  EXPECT_EQ(r.of(L::C).true_positive, 2u);
  EXPECT_EQ(r.of(L::C).predicted, 4u);
  EXPECT_EQ(r.of(L::E).support, 4u);
  EXPECT_EQ(r.of(L::E).predicted, 6u);
  const double f1_c = 2.0 * 0.5 * (1.0 / 3) / (0.5 + 1.0 / 3);
  const double f1_e = 2.0 * (1.0 / 3) * 0.5 / (0.5 + 1.0 / 3);
  EXPECT_NEAR(r.f1, (6 * f1_c + 4 * f1_e + 2 * 1.0) / 12, 1e-12);
  expect_matches_oracle(r, oracle::tally(swap_fixture()));
}

TEST(Score, MatchesBruteForceOnRandomMicroCorpora) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto rows = oracle::micro_corpus(rng);
    std::vector<corpus::Prediction> preds;
    std::vector<corpus::Segment> golds;
    split_rows(rows, preds, golds);
    SCOPED_TRACE(trial);
    expect_matches_oracle(score(preds, golds), oracle::tally(rows));
  }
}

TEST(Score, PredictionOrderDoesNotMatter) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = oracle::micro_corpus(rng);
    std::vector<corpus::Prediction> preds;
    std::vector<corpus::Segment> golds;
    split_rows(rows, preds, golds);
    const auto base = score(preds, golds);
    std::reverse(preds.begin(), preds.end());
    EXPECT_EQ(score(preds, golds), base);
  }
}

TEST(Score, PerRowMacro) {
  std::vector<corpus::Prediction> preds;
  std::vector<corpus::Segment> golds;
  split_rows(swap_fixture(), preds, golds);
  const auto r = score(preds, golds, {MetricMode::PerRowMacro});
  const auto row2 = oracle::tally({swap_fixture()[1]});
  EXPECT_NEAR(r.f1, (1.0 + row2.w_f1) / 2, 1e-12);
  EXPECT_EQ(r.metric, MetricMode::PerRowMacro);
}

TEST(Score, IdMismatch) {
  std::vector<corpus::Prediction> preds;
  std::vector<corpus::Segment> golds;
  split_rows(swap_fixture(), preds, golds);
  preds[1].id = "99";
  try {
    score(preds, golds);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::IdMismatch);
  }
  preds.pop_back();
  EXPECT_THROW(score(preds, golds), EvalError);
}

TEST(Swap, Basics) {
  const corpus::Segment g{"1", "A rose so B fell.", corpus::GoldPair{"A rose", "B fell."}};
  EXPECT_TRUE(detect_swap({"1", g.text, "B fell.", "A rose"}, g));
  EXPECT_FALSE(detect_swap({"1", g.text, "A rose", "B fell."}, g));
  EXPECT_FALSE(detect_swap({"1", g.text, "", "A rose"}, g));
}

TEST(Swap, JaccardByHand) {
  EXPECT_DOUBLE_EQ(token_jaccard("a b c", "b c d"), 0.5);
  EXPECT_DOUBLE_EQ(token_jaccard("a a", "a"), 1.0);
  EXPECT_DOUBLE_EQ(token_jaccard("", ""), 0.0);
}

TEST(Overflow, Basics) {
  const std::string gold = "GDP fell 20% between 1988 and 1993.";
  EXPECT_TRUE(detect_overflow(
      gold + " There were suddenly hundreds of thousands of unemployed in a country that, under "
             "Communism, had had full employment.",
      gold));
  EXPECT_FALSE(detect_overflow(gold, gold));
  EXPECT_FALSE(detect_overflow("GDP fell 20%", gold));
}

TEST(Report, MarkdownRowLayout) {
  EvalReport r;
  r.precision = 0.58;
  r.recall = 0.52;
  r.f1 = 0.54;
  r.exact_match = 0.08;
  const std::vector<std::pair<std::string, EvalReport>> runs = {{"Ours", r}};
  const auto md = render_report(r, runs, ReportFormat::Markdown, {2});
  EXPECT_NE(md.find("| Submission | Precision | Recall | F1 | Exact Match |\n"), std::string::npos);
  EXPECT_NE(md.find("| Ours | 0.58 | 0.52 | 0.54 | 0.08 |\n"), std::string::npos);
}

TEST(Report, EmptyRunsIsHeaderOnly) {
  const auto md = render_report(EvalReport{}, {}, ReportFormat::Markdown);
  const auto table_end = md.find("\n\n");
  const auto table = md.substr(0, table_end + 1);
  EXPECT_EQ(table,
            "| Submission | Precision | Recall | F1 | Exact Match |\n"
            "|:-----------|----------:|-------:|---:|------------:|\n");
}

TEST(Report, JsonRoundTrip) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<corpus::Prediction> preds;
    std::vector<corpus::Segment> golds;
    split_rows(oracle::micro_corpus(rng), preds, golds);
    const auto r = score(preds, golds, {trial % 2 ? MetricMode::PerRowMacro : MetricMode::Pooled});
    const std::vector<std::pair<std::string, EvalReport>> runs = {{"run", r}};
    const auto j = nlohmann::json::parse(render_report(r, runs, ReportFormat::Json));
    EXPECT_EQ(j.at("report").get<EvalReport>(), r);
    EXPECT_EQ(j.at("runs").at(0).at("report").get<EvalReport>(), r);
    EXPECT_EQ(j.at("runs").at(0).at("label"), "run");
  }
}

TEST(Report, MalformedJsonRejected) {
  EXPECT_THROW(nlohmann::json::parse(R"({"metric":"pooled"})").get<EvalReport>(), EvalError);
}
