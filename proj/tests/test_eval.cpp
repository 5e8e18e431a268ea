#include <gtest/gtest.h>

#include <random>

#include "vulnpath/corpus.hpp"
#include "vulnpath/error.hpp"
#include "vulnpath/eval.hpp"
#include "vulnpath/external_scorer.hpp"
#include "vulnpath/pdg_builder.hpp"

using namespace vulnpath;

namespace {

ProgramDependenceGraph lines(std::initializer_list<int> ls) {
  ProgramDependenceGraph g;
  g.id = "g";
  for (int l : ls) g.nodes.push_back({NodeId(l), l, "x;"});
  return g;
}

FlowPath path(std::initializer_list<int> ids) {
  FlowPath p;
  for (int i : ids) p.nodes.emplace_back(i);
  p.psp.node = p.nodes.front();
  return p;
}

std::vector<LabeledSample> small_corpus(std::size_t count) {
  CorpusOptions o;
  o.seed = 3;
  o.count = count;
  std::vector<LabeledSample> out;
  for (auto& e : generate_corpus(o)) out.push_back(std::move(e.sample));
  return out;
}

std::string render_all(const EvalReport& r) {
  return render_report(r, ReportFormat::csv) + render_samples(r, ReportFormat::csv) + render_metrics(r.metrics);
}

}  // namespace

TEST(LineCoverage, ThreeCases) {
  const auto g = lines({1, 2, 3, 4});
  EXPECT_EQ(line_coverage(path({3, 2}), g, {2, 3}), 1.0);
  EXPECT_EQ(line_coverage(path({4, 1}), g, {2, 3}), 0.0);
  EXPECT_EQ(line_coverage(path({3, 1}), g, {2, 3}), 0.5);
  EXPECT_THROW(line_coverage(path({3}), g, {}), ValidationError);
}

TEST(LineCoverage, MonotoneInPathNodes) {
  const auto g = lines({1, 2, 3, 4, 5});
  const std::set<int> vuln = {1, 4, 5};
  EXPECT_LE(line_coverage(path({4}), g, vuln), line_coverage(path({4, 2}), g, vuln));
  EXPECT_LE(line_coverage(path({4, 2}), g, vuln), line_coverage(path({4, 2, 1}), g, vuln));
}

TEST(DetectionMetrics, Examples) {
  const auto perfect = detection_metrics({true, false, true}, {true, false, true});
  EXPECT_EQ(perfect.acc, 1.0);
  EXPECT_EQ(perfect.fpr, 0.0);
  EXPECT_EQ(perfect.fnr, 0.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto all_pos = detection_metrics({true, true, true, true}, {true, false, true, false});
  EXPECT_EQ(all_pos.precision, 0.5);
  EXPECT_EQ(all_pos.recall, 1.0);
  EXPECT_NEAR(all_pos.f1, 2.0 / 3.0, 1e-12);
  const auto none = detection_metrics({false, false}, {true, false});
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_THROW(detection_metrics({true}, {true, false}), ValidationError);
}

TEST(DetectionMetrics, RandomTwentyByHand) {
  std::mt19937_64 rng(4);
  std::vector<bool> p(20), l(20);
  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (int i = 0; i < 20; ++i) {
    p[i] = rng() % 2;
    l[i] = rng() % 2;
    (p[i] ? (l[i] ? tp : fp) : (l[i] ? fn : tn))++;
  }
  const auto m = detection_metrics(p, l);
  EXPECT_EQ(m.tp, static_cast<std::size_t>(tp));
  EXPECT_EQ(m.fp, static_cast<std::size_t>(fp));
  EXPECT_EQ(m.tn, static_cast<std::size_t>(tn));
  EXPECT_EQ(m.fn, static_cast<std::size_t>(fn));
  EXPECT_DOUBLE_EQ(m.acc, (tp + tn) / 20.0);
  EXPECT_DOUBLE_EQ(m.fpr, static_cast<double>(fp) / (fp + tn));
  EXPECT_DOUBLE_EQ(m.fnr, static_cast<double>(fn) / (fn + tp));
  EXPECT_DOUBLE_EQ(m.precision, static_cast<double>(tp) / (tp + fp));
}

TEST(Evaluate, OracleCoversPlantedLines) {
  const auto data = small_corpus(40);
  LabelOracle oracle = LabelOracle::from_dataset(data);
  EvalParams params;
  params.ks = {3, 5, 7};
  const auto r = evaluate(data, oracle, params, SinkConfig::defaults());
  ASSERT_EQ(r.overall.size(), 3u);
  for (const auto& o : r.overall) EXPECT_EQ(o.mean_lc, 1.0);
  std::size_t vulnerable = 0;
  for (const auto& s : data) vulnerable += s.label == Label::vulnerable;
  EXPECT_EQ(r.true_positives, vulnerable);
  for (const auto& o : r.overall) EXPECT_EQ(o.n_samples, vulnerable);
  std::set<std::string> cwes;
  for (const auto& s : data) cwes.insert(s.cwe);
  EXPECT_EQ(r.aggregates.size(), cwes.size() * 3);
}

TEST(Evaluate, AllSafeDetectorHasNoTruePositives) {
  const auto data = small_corpus(10);
  FunctionDetector safe("safe", [](const ProgramDependenceGraph&) { return 0.1; });
  const auto r = evaluate(data, safe, {}, SinkConfig::defaults());
  EXPECT_EQ(r.true_positives, 0u);
  EXPECT_TRUE(r.aggregates.empty());
  EXPECT_NE(std::find(r.notes.begin(), r.notes.end(), "no TP; LC undefined"), r.notes.end());
}

TEST(Evaluate, NoPspCountsAsZero) {
  LabeledSample s;
  s.pdg = build_pdg("void f() {\nint a = 1;\nprintIntLine(a);\n}\n", "plain");
  s.label = Label::vulnerable;
  s.vuln_lines = {2};
  s.cwe = "CWE0";
  FunctionDetector yes("yes", [](const ProgramDependenceGraph&) { return 0.9; });
  const auto r = evaluate({s}, yes, {}, SinkConfig::defaults());
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].lc, 0.0);
  EXPECT_EQ(r.rows[0].note, "no PSP");
  EXPECT_EQ(r.no_psp, 1u);
  ASSERT_EQ(r.aggregates.size(), 1u);
  EXPECT_EQ(r.aggregates[0].mean_lc, 0.0);
}

TEST(Evaluate, ScorerFailureIsPerSample) {
  auto data = small_corpus(12);
  const std::string victim = data[3].pdg.id;
  FunctionDetector flaky("flaky", [&](const ProgramDependenceGraph& g) {
    if (g.id == victim) throw ScorerError("boom", 7);
    return 0.9;
  });
  const auto r = evaluate(data, flaky, {}, SinkConfig::defaults());
  EXPECT_EQ(r.scorer_errors, 1u);
  EXPECT_EQ(r.metrics.tp + r.metrics.fp + r.metrics.tn + r.metrics.fn, data.size() - 1);
  bool noted = false;
  for (const auto& row : r.rows)
    if (row.id == victim) noted = row.note.find("boom") != std::string::npos && !row.p_G;
  EXPECT_TRUE(noted);
}

TEST(Evaluate, DeterministicAcrossJobCounts) {
  const auto data = small_corpus(30);
  LabelOracle oracle = LabelOracle::from_dataset(data, 0.9, 0.3);
  EvalParams one;
  one.ks = {3, 5};
  EvalParams four = one;
  four.jobs = 4;
  const auto a = evaluate(data, oracle, one, SinkConfig::defaults());
  const auto b = evaluate(data, oracle, four, SinkConfig::defaults());
  EXPECT_EQ(render_all(a), render_all(b));
}

TEST(Evaluate, OneExternalScorerPerWorker) {
  const auto data = small_corpus(8);
  std::atomic<int> spawned{0};
  DetectorFactory factory = [&]() -> std::unique_ptr<Detector> {
    ++spawned;
    return std::make_unique<ExternalScorer>(std::vector<std::string>{VULNPATH_MOCK_SCORER, "--prob", "0.7"});
  };
  EvalParams params;
  params.jobs = 3;
  const auto r = evaluate(data, factory, params, SinkConfig::defaults());
  EXPECT_EQ(spawned.load(), 3);
  EXPECT_EQ(r.scorer_errors, 0u);
  EXPECT_EQ(r.metrics.fn + r.metrics.tn, 0u);
}

TEST(Evaluate, RejectsBadParameters) {
  FunctionDetector d("d", [](const ProgramDependenceGraph&) { return 0.5; });
  EvalParams p;
  p.ks = {};
  EXPECT_THROW(evaluate(small_corpus(2), d, p, SinkConfig::defaults()), ValidationError);
  p.ks = {0};
  EXPECT_THROW(evaluate(small_corpus(2), d, p, SinkConfig::defaults()), ValidationError);
}

TEST(Report, EmptyAndSingleRow) {
  EvalReport empty;
  EXPECT_EQ(render_report(empty, ReportFormat::csv), "cwe,k,mean_LC,n_samples\n");
  EXPECT_EQ(render_report(empty, ReportFormat::markdown), "| cwe | k | mean_LC | n_samples |\n| --- | --- | --- | --- |\n");
  EvalReport one;
  one.aggregates.push_back({"CWE787", 5, 0.9, 3});
  EXPECT_EQ(render_report(one, ReportFormat::csv), "cwe,k,mean_LC,n_samples\nCWE787,5,0.9000,3\n");
}

TEST(Report, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}
