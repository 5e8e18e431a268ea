#include <gtest/gtest.h>

#include "vulnpath/error.hpp"
#include "vulnpath/graph.hpp"

using namespace vulnpath;

namespace {

ProgramDependenceGraph small() {
  ProgramDependenceGraph g;
  g.id = "small";
  g.nodes = {{NodeId(3), 3, "y = x;"}, {NodeId(1), 1, "x = 1;"}, {NodeId(2), 2, "if (x < 2) {"}};
  g.edges = {{NodeId(1), NodeId(3), EdgeKind::data, "x"},
             {NodeId(2), NodeId(3), EdgeKind::control, ""},
             {NodeId(1), NodeId(2), EdgeKind::data, "x"}};
  return g;
}

}  // namespace

TEST(Graph, CanonicalizeSortsAndKeepsDuplicatesForValidation) {
  auto dup = small();
  dup.edges.push_back(dup.edges.front());
  EXPECT_EQ(canonicalize(dup).edges.size(), 4u);
  EXPECT_FALSE(validate(canonicalize(dup)).empty());
  const auto g = canonicalize(small());
  ASSERT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(g.nodes[0].id, NodeId(1));
  EXPECT_EQ(g.nodes[2].id, NodeId(3));
  EXPECT_EQ(g.edges.size(), 3u);
  EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end()));
  EXPECT_EQ(canonicalize(g), g);
}

TEST(Graph, ValidateAcceptsWellFormedGraph) { EXPECT_TRUE(validate(canonicalize(small())).empty()); }

TEST(Graph, ValidateReportsEveryProblem) {
  auto g = small();
  g.nodes.push_back({NodeId(1), 0, "  "});
  g.edges.push_back({NodeId(9), NodeId(1), EdgeKind::control, ""});
  g.edges.push_back({NodeId(2), NodeId(2), EdgeKind::control, ""});
  g.edges.push_back({NodeId(1), NodeId(2), EdgeKind::data, ""});
  g.edges.push_back({NodeId(2), NodeId(1), EdgeKind::control, "x"});
  g.edges.push_back(g.edges.front());
  const auto problems = validate(g);
  auto mentions = [&](const std::string& text) {
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(text) != std::string::npos; });
  };
  EXPECT_TRUE(mentions("duplicate id"));
  EXPECT_TRUE(mentions("line 0 < 1"));
  EXPECT_TRUE(mentions("empty code"));
  EXPECT_TRUE(mentions("unknown node 9"));
  EXPECT_TRUE(mentions("self-loop"));
  EXPECT_TRUE(mentions("data edge without var"));
  EXPECT_TRUE(mentions("control edge carries var"));
  EXPECT_TRUE(mentions("duplicate data edge"));
}

TEST(Graph, PredecessorsAndIndexAgree) {
  const auto g = canonicalize(small());
  const auto preds = predecessors(g, NodeId(3));
  EXPECT_EQ(preds.size(), 2u);
  const GraphIndex index(g);
  EXPECT_EQ(index.in_edges(NodeId(3)).size(), 2u);
  EXPECT_TRUE(index.in_edges(NodeId(1)).empty());
  EXPECT_THROW(index.node(NodeId(42)), GraphError);
}

TEST(Graph, InducedSubgraphKeepsInternalEdgesOnly) {
  const auto g = canonicalize(small());
  const auto sub = induced_subgraph(g, {NodeId(1), NodeId(3)});
  EXPECT_EQ(sub.nodes.size(), 2u);
  ASSERT_EQ(sub.edges.size(), 1u);
  EXPECT_EQ(sub.edges[0].var, "x");
  EXPECT_EQ(induced_subgraph(g, {NodeId(1), NodeId(2), NodeId(3)}), g);
  EXPECT_THROW(induced_subgraph(g, {NodeId(7)}), GraphError);
}

TEST(Graph, ProgramOrderSortsByLineThenId) {
  auto g = canonicalize(small());
  FlowPath path{{NodeId(3), NodeId(2), NodeId(1)}, {NodeId(3), SinkKind::AE, {"x"}, "x"}};
  const auto lines = program_order(path, g);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].line, 1);
  EXPECT_EQ(lines[2].line, 3);
  EXPECT_EQ(render_lines(path, g), "1 -- 2 -- 3");
  EXPECT_EQ(program_ordered_nodes(path, g), (std::vector<NodeId>{NodeId(1), NodeId(2), NodeId(3)}));
}

TEST(Graph, SampleValidation) {
  LabeledSample s;
  s.pdg = canonicalize(small());
  s.label = Label::vulnerable;
  EXPECT_FALSE(validate(s).empty());  // vulnerable without lines
  s.vuln_lines = {3};
  EXPECT_TRUE(validate(s).empty());
  s.vuln_lines = {3, 99};
  EXPECT_FALSE(validate(s).empty());
  s.label = Label::safe;
  s.vuln_lines = {3};
  EXPECT_FALSE(validate(s).empty());
}

TEST(Graph, KindNamesRoundTrip) {
  for (auto k : {SinkKind::FC, SinkKind::AU, SinkKind::PU, SinkKind::AE}) EXPECT_EQ(parse_sink_kind(to_string(k)), k);
  for (auto k : {EdgeKind::control, EdgeKind::data}) EXPECT_EQ(parse_edge_kind(to_string(k)), k);
  EXPECT_FALSE(parse_edge_kind("ctrl"));
  EXPECT_FALSE(parse_sink_kind("fc"));
}
