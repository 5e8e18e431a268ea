#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vulnpath {

/// Opaque statement-node identifier. Distinct from the source line: external
/// exports may place several nodes on one line.
struct NodeId {
  std::int64_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::int64_t v) : value(v) {}
  constexpr auto operator<=>(const NodeId&) const = default;
};

std::string to_string(NodeId id);

struct StatementNode {
  NodeId id;
  int line = 1;
  std::string code;

  bool operator==(const StatementNode&) const = default;
};

enum class EdgeKind { control, data };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

/// `src` is the dependee (defining or controlling statement), `dst` the
/// dependent one. `var` is set for data edges only.
struct DependenceEdge {
  NodeId src;
  NodeId dst;
  EdgeKind kind = EdgeKind::control;
  std::string var;

  auto operator<=>(const DependenceEdge&) const = default;
  bool operator==(const DependenceEdge&) const = default;
};

struct ProgramDependenceGraph {
  std::string id;
  std::vector<StatementNode> nodes;
  std::vector<DependenceEdge> edges;

  bool operator==(const ProgramDependenceGraph&) const = default;

  const StatementNode* find(NodeId node) const;
  bool contains(NodeId node) const { return find(node) != nullptr; }
};

/// Copy with nodes sorted by id and edges by (src, dst, kind, var).
ProgramDependenceGraph canonicalize(ProgramDependenceGraph graph);

/// Human-readable invariant violations; empty iff the graph is well formed.
std::vector<std::string> validate(const ProgramDependenceGraph& graph);

/// In-edges of `node`, optionally restricted to one edge kind. Throws
/// GraphError("node not found") for an unknown node.
std::set<std::pair<NodeId, DependenceEdge>> predecessors(const ProgramDependenceGraph& graph, NodeId node,
                                                         std::optional<EdgeKind> kind_filter = std::nullopt);

/// Subgraph containing exactly `node_set` and every edge with both endpoints
/// inside it. Throws GraphError on unknown ids.
ProgramDependenceGraph induced_subgraph(const ProgramDependenceGraph& graph, const std::set<NodeId>& node_set);

/// Precomputed in-edge lists for repeated predecessor queries.
class GraphIndex {
 public:
  explicit GraphIndex(const ProgramDependenceGraph& graph);

  const ProgramDependenceGraph& graph() const noexcept { return *graph_; }
  const StatementNode& node(NodeId id) const;
  bool contains(NodeId id) const { return by_id_.count(id) != 0; }
  /// In-edges sorted by (src, kind, var).
  std::span<const DependenceEdge> in_edges(NodeId id) const;

 private:
  const ProgramDependenceGraph* graph_;
  std::map<NodeId, std::size_t> by_id_;
  std::vector<std::vector<DependenceEdge>> in_edges_;
};

enum class SinkKind { FC, AU, PU, AE };

std::string_view to_string(SinkKind kind);
std::optional<SinkKind> parse_sink_kind(std::string_view text);

/// A potential sink point: a statement that may trigger the vulnerability,
/// together with the variables of the matched expression.
struct SinkPoint {
  NodeId node;
  SinkKind kind = SinkKind::FC;
  std::set<std::string> key_vars;
  std::string detail;

  bool operator==(const SinkPoint&) const = default;
};

/// Backward dependence path. `nodes[0]` is the sink; each following entry is
/// a predecessor of the one before it.
struct FlowPath {
  std::vector<NodeId> nodes;
  SinkPoint psp;

  bool operator==(const FlowPath&) const = default;
};

struct LineOfCode {
  int line = 0;
  std::string code;
  NodeId node;

  bool operator==(const LineOfCode&) const = default;
};

/// Path nodes in source order (line, then node id).
std::vector<LineOfCode> program_order(const FlowPath& path, const ProgramDependenceGraph& graph);
std::vector<NodeId> program_ordered_nodes(const FlowPath& path, const ProgramDependenceGraph& graph);

/// "2 -- 6 -- 7 -- 11"
std::string render_lines(const FlowPath& path, const ProgramDependenceGraph& graph);

enum class Label { safe = 0, vulnerable = 1 };

struct LabeledSample {
  ProgramDependenceGraph pdg;
  Label label = Label::safe;
  std::set<int> vuln_lines;
  std::string cwe;

  bool operator==(const LabeledSample&) const = default;
};

/// Graph violations plus label consistency and labeled-line existence.
std::vector<std::string> validate(const LabeledSample& sample);

}  // namespace vulnpath

template <>
struct std::hash<vulnpath::NodeId> {
  std::size_t operator()(vulnpath::NodeId id) const noexcept { return std::hash<std::int64_t>{}(id.value); }
};
