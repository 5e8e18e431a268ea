#include <gtest/gtest.h>

#include <csignal>
#include <sys/wait.h>

#include "vulnpath/error.hpp"
#include "vulnpath/external_scorer.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/pdg_builder.hpp"
#include "vulnpath/scorer.hpp"

using namespace vulnpath;
using namespace std::chrono_literals;

namespace {

std::vector<std::string> mock(std::vector<std::string> args) {
  args.insert(args.begin(), VULNPATH_MOCK_SCORER);
  return args;
}

ProgramDependenceGraph graph() {
  return build_pdg(read_text_file(std::string(VULNPATH_FIXTURES) + "/motivating.minic"), "motivating");
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ScorerError& e) {
    return e.what();
  }
  return "<no error>";
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(SplitCommand, QuotesAndEscapes) {
  EXPECT_EQ(split_command(R"(python3 "my scorer.py" --model 'a b' x\ y)"),
            (std::vector<std::string>{"python3", "my scorer.py", "--model", "a b", "x y"}));
  EXPECT_THROW(split_command("a \"open"), ValidationError);
  EXPECT_TRUE(split_command("   ").empty());
  EXPECT_THROW(ExternalScorer(std::vector<std::string>{}), ScorerError);
}

TEST(ExternalScorer, PassesProbabilityThrough) {
  ExternalScorer s(mock({"--prob", "0.87"}));
  EXPECT_EQ(s.name(), "mock");
  EXPECT_EQ(s.score(graph()), 0.87);
  EXPECT_EQ(s.score(graph()), 0.87);
}

TEST(ExternalScorer, SeesTheGraphItIsSent) {
  ExternalScorer s(mock({"--contains", "2,11", "--hi", "0.95", "--lo", "0.2"}));
  const auto g = graph();
  EXPECT_EQ(s.score(g), 0.95);
  EXPECT_EQ(s.score(induced_subgraph(g, {NodeId(2), NodeId(6)})), 0.2);
  const SinkPoint sink{NodeId(11), SinkKind::FC, {"data", "dataBuffer"}, ""};
  const auto ex = select_path(g, {{{NodeId(11), NodeId(8)}, sink}, {{NodeId(11), NodeId(7), NodeId(6), NodeId(2)}, sink}}, s);
  EXPECT_EQ(ex.selected.lines, (std::vector<int>{2, 6, 7, 11}));
}

TEST(ExternalScorer, SpawnFailure) {
  EXPECT_TRUE(contains(error_of([] { ExternalScorer s({"/nonexistent/scorer-binary"}); }), "cannot start"));
}

TEST(ExternalScorer, VersionMismatch) {
  EXPECT_TRUE(contains(error_of([] { ExternalScorer s(mock({"--version", "2"})); }), "unsupported protocol version 2"));
}

TEST(ExternalScorer, HandshakeRefusedAndTimeout) {
  EXPECT_TRUE(contains(error_of([] { ExternalScorer s(mock({"--mode", "refuse"})); }), "model not loaded"));
  const auto start = std::chrono::steady_clock::now();
  EXPECT_TRUE(contains(error_of([] { ExternalScorer s(mock({"--mode", "silent"}), {300ms}); }), "timed out"));
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(ExternalScorer, RequestTimeoutNamesRequest) {
  ExternalScorer s(mock({"--mode", "hang", "--after", "1"}), {300ms});
  EXPECT_NO_THROW(s.score(graph()));
  const auto msg = error_of([&] { s.score(graph()); });
  EXPECT_TRUE(contains(msg, "timed out")) << msg;
  EXPECT_TRUE(contains(msg, "request 2")) << msg;
  EXPECT_TRUE(contains(error_of([&] { s.score(graph()); }), "earlier failure"));
}

TEST(ExternalScorer, CrashIsReported) {
  ExternalScorer s(mock({"--mode", "crash-after"}));
  const auto msg = error_of([&] { s.score(graph()); });
  EXPECT_TRUE(contains(msg, "signal")) << msg;
}

TEST(ExternalScorer, ProtocolViolations) {
  {
    ExternalScorer s(mock({"--mode", "garbage"}));
    EXPECT_TRUE(contains(error_of([&] { s.score(graph()); }), "malformed reply"));
  }
  {
    ExternalScorer s(mock({"--mode", "out-of-range"}));
    EXPECT_TRUE(contains(error_of([&] { s.score(graph()); }), "outside [0, 1]"));
  }
  {
    ExternalScorer s(mock({"--mode", "wrong-id"}));
    EXPECT_TRUE(contains(error_of([&] { s.score(graph()); }), "unexpected request id"));
  }
}

TEST(ExternalScorer, DeclinedRequestKeepsHandleUsable) {
  ExternalScorer s(mock({"--mode", "fail", "--after", "0", "--prob", "0.3"}));
  const auto msg = error_of([&] { s.score(graph()); });
  EXPECT_TRUE(contains(msg, "cannot score this graph")) << msg;
  EXPECT_TRUE(contains(msg, "request 1")) << msg;
  EXPECT_TRUE(contains(error_of([&] { s.score(graph()); }), "cannot score this graph"));
}

TEST(ExternalScorer, ChildIsReapedOnDestruction) {
  pid_t pid = -1;
  {
    ExternalScorer s(mock({"--mode", "hang"}), {200ms});
    pid = s.pid();
    EXPECT_GT(pid, 0);
  }
  EXPECT_EQ(::kill(pid, 0), -1);
}
