#include <gtest/gtest.h>

#include "generators.hpp"
#include "properties.hpp"
#include "vulnpath/error.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/pdg_builder.hpp"
#include "vulnpath/psp.hpp"
#include "vulnpath/slicer.hpp"

using namespace vulnpath;

namespace {

ProgramDependenceGraph motivating() {
  return build_pdg(read_text_file(std::string(VULNPATH_FIXTURES) + "/motivating.minic"), "motivating");
}

std::vector<NodeId> ids(std::initializer_list<int> xs) {
  std::vector<NodeId> out;
  for (int x : xs) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(MaxNodes, Examples) {
  EXPECT_EQ(max_nodes({5, 0.5}, 20), 5);
  EXPECT_EQ(max_nodes({7, 0.5}, 6), 3);
  EXPECT_EQ(max_nodes({3, 0.9}, 5), 1);
  EXPECT_EQ(max_nodes({10, 0.3}, 10), 7);  // 0.7 * 10 must not floor to 6
}

TEST(MaxNodes, RejectsBadParameters) {
  EXPECT_THROW(max_nodes({0, 0.5}, 5), ValidationError);
  EXPECT_THROW(max_nodes({3, 1.0}, 5), ValidationError);
  EXPECT_THROW(max_nodes({3, -0.1}, 5), ValidationError);
  EXPECT_THROW(max_nodes({3, 0.5}, 0), ValidationError);
}

TEST(ExtractPrecNodes, KeyVariableFilterAtSinkOnly) {
  ProgramDependenceGraph g;
  g.id = "recv";
  g.nodes = {{NodeId(1), 1, "connectSocket = socket();"},
             {NodeId(2), 2, "n = SIZE;"},
             {NodeId(3), 3, "recv(connectSocket, buf, n - 1, 0);"},
             {NodeId(4), 4, "if (ok) {"},
             {NodeId(5), 5, "m = n;"}};
  g.edges = {{NodeId(1), NodeId(3), EdgeKind::data, "connectSocket"},
             {NodeId(2), NodeId(3), EdgeKind::data, "n"},
             {NodeId(4), NodeId(3), EdgeKind::control, ""},
             {NodeId(1), NodeId(5), EdgeKind::data, "connectSocket"},
             {NodeId(2), NodeId(5), EdgeKind::data, "n"},
             {NodeId(4), NodeId(5), EdgeKind::control, ""}};
  g = canonicalize(g);
  const SinkPoint ae{NodeId(3), SinkKind::AE, {"n"}, "n - 1"};
  EXPECT_EQ(extract_prec_nodes(g, NodeId(3), ae), (std::set<NodeId>{NodeId(2), NodeId(4)}));
  EXPECT_EQ(extract_prec_nodes(g, NodeId(5), ae), (std::set<NodeId>{NodeId(1), NodeId(2), NodeId(4)}));
  EXPECT_TRUE(extract_prec_nodes(g, NodeId(1), ae).empty());
}

TEST(GenerateSlices, MotivatingSinkPaths) {
  const auto g = motivating();
  const SinkPoint sink{NodeId(11), SinkKind::FC, {"data", "dataBuffer"}, "strncpy"};
  const auto paths = generate_slices(g, {5, 0.5}, {sink});
  std::set<std::vector<NodeId>> seqs;
  for (const auto& p : paths) seqs.insert(p.nodes);
  EXPECT_TRUE(seqs.count(ids({11, 7, 6, 2})));
  EXPECT_TRUE(seqs.count(ids({11, 8})));
  for (const auto& p : paths)
    if (p.nodes == ids({11, 7, 6, 2})) EXPECT_EQ(render_lines(p, g), "2 -- 6 -- 7 -- 11");
}

TEST(GenerateSlices, MotivatingExtractedSinksIncludeLine13Path) {
  const auto g = motivating();
  const auto paths = generate_slices(g, {5, 0.5}, extract_sink_nodes(g, SinkConfig::defaults()));
  bool found = false;
  for (const auto& p : paths) found = found || render_lines(p, g).find("2 -- 6 -- 7") == 0;
  EXPECT_TRUE(found);
}

TEST(GenerateSlices, IsolatedSinkAndNoSinks) {
  ProgramDependenceGraph g;
  g.id = "one";
  g.nodes = {{NodeId(4), 4, "x = y + 1;"}};
  const SinkPoint s{NodeId(4), SinkKind::AE, {"y"}, "y + 1"};
  const auto paths = generate_slices(g, {5, 0.5}, {s});
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].nodes, ids({4}));
  EXPECT_TRUE(generate_slices(g, {5, 0.5}, {}).empty());
  const SinkPoint missing{NodeId(9), SinkKind::AE, {}, ""};
  EXPECT_THROW(generate_slices(g, {5, 0.5}, {missing}), GraphError);
}

TEST(GenerateSlices, CyclesTerminateBySimplePathRule) {
  ProgramDependenceGraph g;
  g.id = "loop";
  g.nodes = {{NodeId(1), 1, "a = b;"}, {NodeId(2), 2, "b = a;"}};
  g.edges = {{NodeId(1), NodeId(2), EdgeKind::data, "a"}, {NodeId(2), NodeId(1), EdgeKind::data, "b"}};
  const SinkPoint s{NodeId(2), SinkKind::AE, {"a"}, ""};
  const auto paths = generate_slices(canonicalize(g), {10, 0.0}, {s});
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].nodes, ids({2, 1}));
}

TEST(DedupPaths, Examples) {
  const SinkPoint s{NodeId(1), SinkKind::AE, {}, ""};
  EXPECT_EQ(dedup_paths({{ids({1}), s}, {ids({1}), s}}).size(), 1u);
  EXPECT_EQ(dedup_paths({{ids({1, 2}), s}, {ids({2, 1}), s}}).size(), 2u);
}

TEST(GenerateSlices, BudgetLawAndPrefixMonotonicity) {
  vulnpath::testing::Engine rng(5);
  for (int c = 0; c < 100; ++c) {
    const auto g = vulnpath::testing::random_pdg(rng, 12, 0.3);
    const auto sinks = vulnpath::testing::random_sinks(rng, g);
    for (int k = 1; k <= 5; ++k) {
      const SliceParams params{k, 0.25};
      const auto small = generate_slices(g, params, sinks);
      const auto large = generate_slices(g, {k + 1, 0.25}, sinks);
      const auto budget = static_cast<std::size_t>(max_nodes(params, g.nodes.size()));
      for (const auto& p : small) {
        EXPECT_LE(p.nodes.size(), budget);
        EXPECT_EQ(std::set<NodeId>(p.nodes.begin(), p.nodes.end()).size(), p.nodes.size());
        bool extended = false;
        for (const auto& q : large)
          extended = extended || (q.nodes.size() >= p.nodes.size() &&
                                  std::equal(p.nodes.begin(), p.nodes.end(), q.nodes.begin()));
        EXPECT_TRUE(extended);
      }
    }
  }
}

TEST(GenerateSlices, MatchesBruteForceOracle) {
  const auto r = vulnpath::testing::slicer_matches_oracle(3, 200);
  EXPECT_TRUE(r) << *r.failure;
}
