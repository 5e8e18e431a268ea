#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>

#include "vulnpath/graph_io.hpp"

namespace fs = std::filesystem;
using vulnpath::read_text_file;
using vulnpath::write_text_file;

namespace {

struct CliResult {
  int code = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vulnpath_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("'") + VULNPATH_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string fixture(const std::string& name) { return std::string(VULNPATH_FIXTURES) + "/" + name; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BuildPdgSingleFileMatchesGolden) {
  const auto r = run("build-pdg " + fixture("motivating.minic") + " -o " + path("out") + " --indent 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(path("out/motivating.pdg.json")), read_text_file(fixture("motivating.pdg.json")));
}

TEST_F(Cli, BuildPdgReportsSyntaxErrorsPerFile) {
  fs::create_directories(path("src"));
  write_text_file(path("src/good.minic"), "void f() {\nint a = 1;\n}\n");
  write_text_file(path("src/bad.minic"), "void f() {\nint = ;\n}\n");
  write_text_file(path("src/notes.txt"), "ignored");
  const auto r = run("build-pdg " + path("src") + " -o " + path("out"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.minic: line 2"), std::string::npos) << r.err;
  EXPECT_TRUE(fs::exists(path("out/good.pdg.json")));
  EXPECT_FALSE(fs::exists(path("out/bad.pdg.json")));
}

TEST_F(Cli, BuildPdgDirectoryGivesOneOutputPerSource) {
  fs::create_directories(path("src"));
  for (int i = 0; i < 3; ++i) write_text_file(path("src/f" + std::to_string(i) + ".minic"), "void f() {\nx = 1;\n}\n");
  const auto r = run("build-pdg " + path("src") + " -o " + path("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::distance(fs::directory_iterator(path("out")), fs::directory_iterator()), 3);
}

TEST_F(Cli, ExplainMotivatingIsGoldenAndByteStable) {
  const std::string args = "explain " + fixture("motivating.pdg.json") + " --scorer oracle:nodes=2,11";
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, read_text_file(fixture("motivating.explain.json")));
  const auto j = vulnpath::Json::parse(a.out);
  EXPECT_EQ(j["selected"]["lines"], vulnpath::Json::parse("[2,6,7,11]"));
  EXPECT_TRUE(j.contains("p_G"));
  EXPECT_TRUE(j["candidates"].is_array());
}

TEST_F(Cli, ExplainWritesDot) {
  const auto r = run("explain " + fixture("motivating.minic") + " --scorer oracle:nodes=2,11 --dot " + path("m.dot"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dot = read_text_file(path("m.dot"));
  EXPECT_NE(dot.find("n2 -> n6"), std::string::npos);
  EXPECT_NE(dot.find("color=red"), std::string::npos);
}

TEST_F(Cli, ExplainExitCodes) {
  write_text_file(path("plain.minic"), "void f() {\nint a = 1;\nprintIntLine(a);\n}\n");
  EXPECT_EQ(run("explain " + path("plain.minic") + " --scorer oracle:nodes=2").code, 2);
  const auto crash = run("explain " + fixture("motivating.pdg.json") + " --scorer \"exec:" + VULNPATH_MOCK_SCORER +
                         " --mode crash-after\"");
  EXPECT_EQ(crash.code, 3) << crash.err;
  EXPECT_EQ(run("explain " + path("missing.json") + " --scorer oracle:nodes=2").code, 1);
  EXPECT_EQ(run("explain " + fixture("motivating.pdg.json") + " --scorer magic").code, 1);
  EXPECT_EQ(run("explain " + fixture("motivating.pdg.json") + " --scorer oracle:nodes=2 --sparsity 1.5").code, 1);
}

TEST_F(Cli, ExplainThroughExternalScorer) {
  const auto r = run("explain " + fixture("motivating.pdg.json") + " --scorer \"exec:" + VULNPATH_MOCK_SCORER +
                     " --contains 2,11 --hi 0.95 --lo 0.2\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(vulnpath::Json::parse(r.out)["selected"]["lines"], vulnpath::Json::parse("[2,6,7,11]"));
}

TEST_F(Cli, TrainIsDeterministicAndRejectsOneClass) {
  ASSERT_EQ(run("gen-corpus --seed 5 --count 30 -o " + path("c")).code, 0);
  const auto a = run("train --dataset " + path("c/dataset.jsonl") + " -o " + path("a.json") + " --seed 3");
  const auto b = run("train --dataset " + path("c/dataset.jsonl") + " -o " + path("b.json") + " --seed 3");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("loss"), std::string::npos);
  EXPECT_EQ(read_text_file(path("a.json")), read_text_file(path("b.json")));

  std::string safe_only;
  for (const auto& s : vulnpath::read_dataset(path("c/dataset.jsonl")).samples)
    if (s.label == vulnpath::Label::safe) safe_only += vulnpath::sample_to_json(s).dump() + "\n";
  write_text_file(path("safe.jsonl"), safe_only);
  const auto r = run("train --dataset " + path("safe.jsonl") + " -o " + path("x.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("degenerate training set"), std::string::npos);
}

TEST_F(Cli, EvalReportHasRowPerCweAndK) {
  ASSERT_EQ(run("gen-corpus --seed 8 --count 40 -o " + path("c")).code, 0);
  const std::string args = "eval --dataset " + path("c/dataset.jsonl") + " --scorer oracle:labels --k 3,5,7 --out-dir " + path("r");
  const auto a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto csv = read_text_file(path("r/report.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 3);
  EXPECT_TRUE(fs::exists(path("r/samples.csv")));
  EXPECT_NE(a.out.find("mean LC (all CWEs, k=5): 1.0000"), std::string::npos) << a.out;
  const auto b = run(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(csv, read_text_file(path("r/report.csv")));
}

TEST_F(Cli, EvalRejectsEmptyDataset) {
  write_text_file(path("empty.jsonl"), "");
  EXPECT_EQ(run("eval --dataset " + path("empty.jsonl") + " --scorer oracle:labels").code, 1);
}

TEST_F(Cli, GenCorpusIsDeterministic) {
  ASSERT_EQ(run("gen-corpus --seed 4 --count 10 -o " + path("a")).code, 0);
  ASSERT_EQ(run("gen-corpus --seed 4 --count 10 -o " + path("b")).code, 0);
  EXPECT_EQ(read_text_file(path("a/dataset.jsonl")), read_text_file(path("b/dataset.jsonl")));
  EXPECT_EQ(run("gen-corpus --count 10 --mix CWE999=1 -o " + path("c")).code, 1);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("explain").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}
