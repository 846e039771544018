#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Outcome {
  int exit_code = -1;
  std::string out;
};

Outcome run(const std::string &args, const std::string &env = "") {
  const std::string command = env + " '" PONTE_CLI_PATH "' " + args + " 2>&1";
  Outcome outcome;
  FILE *pipe = ::popen(command.c_str(), "r");
  if (!pipe) return outcome;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) outcome.out.append(buf, n);
  const int status = ::pclose(pipe);
  outcome.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return outcome;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path printed_path(const std::string &out, const std::string &label) {
  const auto at = out.find(label + ": ");
  if (at == std::string::npos) return {};
  const auto start = at + label.size() + 2;
  return out.substr(start, out.find('\n', start) - start);
}

Json report_of(const Outcome &o) { return Json::parse(slurp(printed_path(o.out, "report"))); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ponte-cli-test-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string d(const std::string &name) const { return "'" + (dir_ / name).string() + "'"; }

  fs::path dir_;
};

TEST_F(Cli, CstsEvalOnRankAlignedData) {
  ASSERT_EQ(run("synth csts --pairs 12 --dim 16 --out " + d("data")).exit_code, 0);
  const auto o = run("csts-eval --dataset " + d("data/csts.csv") + " --mock-dim 16 --mock-mix " +
                     d("data/csts_mix.json") + " --template T9 --tsv --out " + d("reports"));
  ASSERT_EQ(o.exit_code, 0) << o.out;
  const auto report = report_of(o);
  EXPECT_EQ(report.at("task"), "csts");
  EXPECT_EQ(report.at("summary").at("spearman_rho").get<double>(), 1.0);
  EXPECT_EQ(report.at("items").size(), 12u);
  EXPECT_EQ(printed_path(o.out, "report").filename().string().rfind("csts-csts-T9-", 0), 0u);
  EXPECT_TRUE(fs::exists(printed_path(o.out, "tsv")));
}

TEST_F(Cli, ClusterEvalOnBlobs) {
  ASSERT_EQ(run("synth blobs --labels 4 --per-label 6 --dim 16 --out " + d("data")).exit_code, 0);
  const auto o = run("cluster-eval --dataset " + d("data/blobs.csv") + " --mock-dim 16 --mock-mix " +
                     d("data/blobs_mix.json") + " --condition 'the topic' --out " + d("reports"));
  ASSERT_EQ(o.exit_code, 0) << o.out;
  const auto report = report_of(o);
  EXPECT_NEAR(report.at("summary").at("mean").at("v_measure").get<double>(), 1.0, 1e-9);
  EXPECT_EQ(report.at("config").at("k"), 4);
  EXPECT_EQ(report.at("config").at("seeds"), Json({0, 1, 2, 3, 4}));
  EXPECT_EQ(report.at("config").at("condition_text"), "the topic");
}

TEST_F(Cli, SearchesPickTheConstructedWinner) {
  ASSERT_EQ(run("synth csts --pairs 10 --dim 16 --template T11 --out " + d("data")).exit_code, 0);
  ASSERT_EQ(run("synth blobs --labels 3 --per-label 5 --dim 16 --condition 'the emotion' --out " + d("data")).exit_code,
            0);
  const auto t = run("template-search --dataset " + d("data/csts.csv") + " --mock-dim 16 --mock-mix " +
                     d("data/csts_mix.json") + " --out " + d("reports"));
  ASSERT_EQ(t.exit_code, 0) << t.out;
  EXPECT_EQ(report_of(t).at("summary").at("selected"), "T11");
  EXPECT_EQ(report_of(t).at("summary").at("ranking").size(), 13u);

  const auto c = run("condition-search --dataset " + d("data/blobs.csv") + " --mock-dim 16 --mock-mix " +
                     d("data/blobs_mix.json") + " --condition 'the topic' --condition 'the emotion' --out " +
                     d("reports"));
  ASSERT_EQ(c.exit_code, 0) << c.out;
  EXPECT_EQ(report_of(c).at("summary").at("selected"), "the emotion");
}

TEST_F(Cli, WarmCacheReportsMatch) {
  ASSERT_EQ(run("synth csts --pairs 8 --dim 16 --out " + d("data")).exit_code, 0);
  const std::string args = "csts-eval --dataset " + d("data/csts.csv") + " --mock-dim 16 --mock-mix " +
                           d("data/csts_mix.json") + " --generate-words --cache-dir " + d("cache") + " --out ";
  const auto cold = run(args + d("cold"));
  const auto warm = run(args + d("warm"));
  ASSERT_EQ(cold.exit_code, 0) << cold.out;
  ASSERT_EQ(warm.exit_code, 0) << warm.out;
  auto a = report_of(cold), b = report_of(warm);
  for (const char *key : {"started_at", "finished_at"}) {
    a.erase(key);
    b.erase(key);
  }
  EXPECT_EQ(a.dump(), b.dump());

  const auto stats = run("cache stats --cache-dir " + d("cache"));
  EXPECT_NE(stats.out.find("entries\t16"), std::string::npos) << stats.out;
  const auto cleared = run("cache clear", "PONTE_CACHE_DIR=" + d("cache"));
  EXPECT_EQ(cleared.exit_code, 0);
  EXPECT_NE(cleared.out.find("removed\t16"), std::string::npos) << cleared.out;
}

TEST_F(Cli, EnvironmentCacheDirFallback) {
  ASSERT_EQ(run("synth blobs --labels 2 --per-label 3 --dim 8 --out " + d("data")).exit_code, 0);
  const auto o = run("cluster-eval --dataset " + d("data/blobs.csv") + " --mock-dim 8 --condition c --out " +
                         d("reports"),
                     "PONTE_CACHE_DIR=" + d("envcache"));
  ASSERT_EQ(o.exit_code, 0) << o.out;
  EXPECT_NE(run("cache stats --cache-dir " + d("envcache")).out.find("entries\t6"), std::string::npos);
}

TEST_F(Cli, EmbedPrintsVectorAndWord) {
  const auto o = run("embed --text 'Best fish I have ever had.' --condition 'the emotion' --mock-dim 8 --generate-words");
  ASSERT_EQ(o.exit_code, 0) << o.out;
  const auto j = Json::parse(o.out);
  EXPECT_EQ(j.at("prompt"), "Express this text \"Best fish I have ever had.\" in one word in terms of the emotion: \"");
  EXPECT_EQ(j.at("embedding").size(), 8u);
  EXPECT_TRUE(j.at("generated_word").is_string());
}

TEST_F(Cli, ProjectWritesTsvAndSvg) {
  ASSERT_EQ(run("synth blobs --labels 2 --per-label 6 --dim 8 --out " + d("data")).exit_code, 0);
  const auto o = run("project --dataset " + d("data/blobs.csv") + " --mock-dim 8 --condition a --condition b --svg "
                     "--iters 300 --out " + d("proj"));
  ASSERT_EQ(o.exit_code, 0) << o.out;
  const auto tsv = slurp(printed_path(o.out, "tsv"));
  EXPECT_EQ(tsv.rfind("x\ty\tlabel\tgenerated_word\tcondition\n", 0), 0u);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 25);
  EXPECT_NE(slurp(printed_path(o.out, "svg")).find("<svg"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("csts-eval --dataset " + d("missing.csv")).exit_code, 2);
  EXPECT_EQ(run("no-such-command").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("--help").exit_code, 0);
  EXPECT_EQ(run("embed --text x --template T99 --condition c").exit_code, 2);
  EXPECT_EQ(run("embed --text x").exit_code, 2);
  EXPECT_EQ(run("embed --text x --condition c --backend-url http://127.0.0.1:1 --model-id m --timeout 2000").exit_code, 3);
  EXPECT_EQ(run("embed --text x --condition c --backend-url http://127.0.0.1:1").exit_code, 2);
  EXPECT_EQ(run("cache stats").exit_code, 2);

  { std::ofstream(dir_ / "flat.csv") << "text1,text2,condition,score\na,b,c,3\nd,e,c,3\n"; }
  const auto flat = run("csts-eval --dataset " + d("flat.csv"));
  EXPECT_EQ(flat.exit_code, 2);
  EXPECT_NE(flat.out.find("ZeroVariance"), std::string::npos) << flat.out;
}

TEST_F(Cli, SplitAndTemplatesFile) {
  { std::ofstream(dir_ / "t.tsv") << "mine\tIn a word, \"{text}\" regarding {condition} is: \"\n"; }
  {
    std::ofstream(dir_ / "pairs.jsonl")
        << R"({"text1": "a", "text2": "b", "condition": "c", "score": 1, "split": "validation"})" "\n"
        << R"({"text1": "d", "text2": "e", "condition": "c", "score": 5, "split": "validation"})" "\n"
        << R"({"text1": "f", "text2": "g", "condition": "c", "score": 2, "split": "test"})" "\n";
  }
  const auto o = run("csts-eval --dataset " + d("pairs.jsonl") + " --split validation --templates-file " + d("t.tsv") +
                     " --template mine --out " + d("r"));
  ASSERT_EQ(o.exit_code, 0) << o.out;
  EXPECT_EQ(report_of(o).at("summary").at("n"), 2);
  EXPECT_EQ(report_of(o).at("config").at("template"), "mine");
}

}  // namespace
