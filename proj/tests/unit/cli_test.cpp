#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causal/cli.hpp"
#include "causal/corpus.hpp"

namespace fs = std::filesystem;
using namespace causal;

namespace {

const std::string kData = CAUSAL_TEST_DATA;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "causal-harness");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("causal_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, StatsTable) {
  const auto r = run({"stats", kData + "/stats3.csv"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("# Documents"), std::string::npos);
  EXPECT_NE(r.out.find("3\n"), std::string::npos);
  EXPECT_NE(r.out.find("5.33"), std::string::npos);
}

TEST(Cli, StatsJsonMatchesLibrary) {
  const auto r = run({"stats", kData + "/fixture10.csv", "--json"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n_documents"], 10);
  EXPECT_EQ(j["n_duplicates"], 2);
  EXPECT_DOUBLE_EQ(j["doc_len"]["avg"].get<double>(), 28.9);
}

TEST(Cli, MissingFileIsInputError) {
  const auto r = run({"stats", "/nonexistent/corpus.csv"});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Cli, ValidateReportsBadRows) {
  const auto dir = fresh_dir("validate");
  std::ofstream(dir / "c.csv") << "Index; Text; Cause; Effect\n1; A rose, B fell.; A rose; B fell.\n"
                                  "2; A rose, B fell.; a rose; B fell.\n";
  auto r = run({"validate", (dir / "c.csv").string()});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("2"), std::string::npos);
  r = run({"validate", (dir / "c.csv").string(), "--strict"});
  EXPECT_EQ(r.code, cli::kInputError);
  fs::remove_all(dir);
}

TEST(Cli, PredictOracleReproducesGold) {
  const auto dir = fresh_dir("oracle");
  const auto out = dir / "pred.csv";
  const auto r = run({"predict", "--corpus", kData + "/oracle50.csv", "--out", out.string(),
                      "--backend", "mock-oracle"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_TRUE(fs::exists(out.string() + ".manifest.json"));
  const auto gold = corpus::load_corpus(kData + "/oracle50.csv", true).segments;
  const auto pred = corpus::load_predictions(out).predictions;
  ASSERT_EQ(pred.size(), gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) EXPECT_EQ(pred[i], corpus::gold_as_prediction(gold[i]));

  const auto e = run({"evaluate", "--pred", out.string(), "--gold", kData + "/oracle50.csv", "--json"});
  ASSERT_EQ(e.code, cli::kOk) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  EXPECT_EQ(j["report"]["weighted"]["f1"], 1.0);
  EXPECT_EQ(j["report"]["exact_match"], 1.0);
  fs::remove_all(dir);
}

TEST(Cli, PredictCueOnExampleText) {
  const auto dir = fresh_dir("cue");
  std::ofstream(dir / "c.csv")
      << "Index; Text\n1; Things got worse when the Wall came down. GDP fell 20% between 1988 and "
         "1993.\n";
  const auto out = dir / "pred.csv";
  const auto r = run({"predict", "--corpus", (dir / "c.csv").string(), "--out", out.string(),
                      "--backend", "cue"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto pred = corpus::load_predictions(out).predictions;
  ASSERT_EQ(pred.size(), 1u);
  EXPECT_EQ(pred[0].cause, "Things got worse when the Wall came down.");
  EXPECT_EQ(pred[0].effect, "GDP fell 20% between 1988 and 1993.");
  fs::remove_all(dir);
}

TEST(Cli, ResumedRunMatchesUninterruptedRun) {
  const auto dir = fresh_dir("resume");
  const auto corpus_path = kData + "/fixture10.csv";
  const auto full = dir / "full.csv";
  ASSERT_EQ(run({"predict", "--corpus", corpus_path, "--out", full.string(), "--backend",
                 "mock-oracle", "--cache-dir", (dir / "cache_a").string()})
                .code,
            cli::kOk);

  // first run only reaches part of the corpus before stopping
  const auto all = corpus::load_corpus(corpus_path, true).segments;
  {
    std::ofstream part(dir / "part.csv");
    part << "Index; Text; Cause; Effect\n";
    for (std::size_t i = 0; i < 4; ++i) {
      part << all[i].id << "; " << all[i].text << "; " << all[i].gold->cause << "; "
           << all[i].gold->effect << "\n";
    }
  }
  const auto cache_b = (dir / "cache_b").string();
  ASSERT_EQ(run({"predict", "--corpus", (dir / "part.csv").string(), "--gold", corpus_path, "--out",
                 (dir / "partial.csv").string(), "--backend", "mock-oracle", "--cache-dir", cache_b})
                .code,
            cli::kOk);
  const auto resumed = dir / "resumed.csv";
  const auto r = run({"predict", "--corpus", corpus_path, "--out", resumed.string(), "--backend",
                      "mock-oracle", "--cache-dir", cache_b});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("cache hits 4"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(resumed), slurp(full));
  fs::remove_all(dir);
}

TEST(Cli, CannedScriptAndConfigPrecedence) {
  const auto dir = fresh_dir("canned");
  std::ofstream(dir / "c.csv") << "Index; Text\n1; When rates rose, stocks fell.\n";
  std::ofstream(dir / "script.json") << R"(["{'Cause': 'rates rose', 'Effect': 'stocks fell.'}"])";
  std::ofstream(dir / "cfg.conf") << "# harness settings\nbackend = mock-oracle\nprompt = gen\n";
  ::setenv("CAUSAL_HARNESS_BACKEND", "mock-canned", 1);
  const auto r = run({"predict", "--corpus", (dir / "c.csv").string(), "--out",
                      (dir / "p.csv").string(), "--config", (dir / "cfg.conf").string(), "--script",
                      (dir / "script.json").string()});
  ::unsetenv("CAUSAL_HARNESS_BACKEND");
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(dir / "p.csv.manifest.json"));
  EXPECT_EQ(manifest["backend"], "mock-canned");
  EXPECT_EQ(manifest["prompt"], "gen");
  const auto pred = corpus::load_predictions(dir / "p.csv").predictions;
  EXPECT_EQ(pred.at(0).cause, "rates rose");
  fs::remove_all(dir);
}

TEST(Cli, RemoteWithoutKeyIsBackendError) {
  ::unsetenv("CAUSAL_HARNESS_API_KEY");
  const auto dir = fresh_dir("remote");
  const auto r = run({"predict", "--corpus", kData + "/stats3.csv", "--out", (dir / "p.csv").string(),
                      "--backend", "remote", "--model", "gpt-x", "--endpoint", "http://127.0.0.1:9/v1"});
  EXPECT_EQ(r.code, cli::kBackendError);
  fs::remove_all(dir);
}

TEST(Cli, EvaluateSwapFixture) {
  const auto dir = fresh_dir("swap");
  std::ofstream(dir / "gold.csv") << "Index; Text; Cause; Effect\n"
                                     "1; Rates rose, so stocks fell.; Rates rose,; stocks fell.\n"
                                     "2; The bank cut rates and lending grew.; The bank cut rates; lending grew.\n";
  std::ofstream(dir / "pred.csv") << "Index; Text; Cause; Effect\n"
                                     "1; Rates rose, so stocks fell.; Rates rose,; stocks fell.\n"
                                     "2; The bank cut rates and lending grew.; lending grew.; The bank cut rates\n";
  const auto r = run({"evaluate", "--pred", (dir / "pred.csv").string(), "--gold",
                      (dir / "gold.csv").string(), "--json", "--out", (dir / "r.json").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["report"]["exact_match"], 0.5);
  EXPECT_EQ(j["report"]["counts"]["n_swapped"], 1);
  const double f1_c = 2.0 * 0.5 * (1.0 / 3) / (0.5 + 1.0 / 3);
  EXPECT_NEAR(j["report"]["weighted"]["f1"].get<double>(), (6 * f1_c + 4 * f1_c + 2) / 12, 1e-12);

  const auto md = run({"report", (dir / "r.json").string(), "--digits", "2"});
  ASSERT_EQ(md.code, cli::kOk) << md.err;
  EXPECT_NE(md.out.find("| Submission | Precision | Recall | F1 | Exact Match |"), std::string::npos);
  EXPECT_NE(md.out.find("| 0.50 |\n"), std::string::npos) << md.out;
  fs::remove_all(dir);
}

TEST(Cli, EvaluateIdMismatchExitsFour) {
  const auto dir = fresh_dir("mismatch");
  std::ofstream(dir / "pred.csv") << "Index; Text; Cause; Effect\nzzz; Rates rose, stocks fell.; ; \n";
  const auto r = run({"evaluate", "--pred", (dir / "pred.csv").string(), "--gold", kData + "/stats3.csv"});
  EXPECT_EQ(r.code, cli::kAlignmentError);
  fs::remove_all(dir);
}

TEST(Cli, ConfigTextParsing) {
  const auto m = cli::parse_config_text("# c\nmodel = gpt-4\n\nmax-tokens=256\n");
  EXPECT_EQ(m.at("model"), "gpt-4");
  EXPECT_EQ(m.at("max_tokens"), "256");
  EXPECT_THROW(cli::parse_config_text("no equals sign\n"), std::runtime_error);
}
