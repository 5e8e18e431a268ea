#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vulnpath/minic.hpp"

namespace vulnpath {

using CfgNode = std::size_t;

inline constexpr CfgNode kEntry = 0;
inline constexpr CfgNode kExit = 1;

struct CfgVertex {
  int line = 0;  ///< 0 for ENTRY/EXIT
  Access access;
  std::string code;
};

/// Statement-level control flow graph. Node 0 is ENTRY, node 1 is EXIT.
class ControlFlowGraph {
 public:
  ControlFlowGraph();

  CfgNode add_node(int line, Access access, std::string code = {});
  /// Duplicate edges are ignored.
  void add_edge(CfgNode from, CfgNode to);

  std::size_t size() const noexcept { return vertices_.size(); }
  const CfgVertex& vertex(CfgNode n) const { return vertices_.at(n); }
  const std::vector<CfgNode>& successors(CfgNode n) const { return succ_.at(n); }
  const std::vector<CfgNode>& predecessors(CfgNode n) const { return pred_.at(n); }
  bool has_edge(CfgNode from, CfgNode to) const;
  std::size_t edge_count() const;

  /// Reverse post-order of a DFS from ENTRY over successors (ascending).
  std::vector<CfgNode> reverse_post_order() const;

 private:
  std::vector<CfgVertex> vertices_;
  std::vector<std::vector<CfgNode>> succ_;
  std::vector<std::vector<CfgNode>> pred_;
};

/// Structured control flow: branches fork at headers and join after the
/// construct, loop bodies flow back to their header, `return` goes to EXIT.
/// A for-header contributes two nodes on its line: the init clause and the
/// condition/step head. Throws ParseError for statements after a `return`
/// that can never execute.
ControlFlowGraph build_cfg(const Program& program);

struct PostDominatorTree {
  /// Immediate post-dominator; empty for EXIT.
  std::vector<std::optional<CfgNode>> ipdom;

  /// Reflexive post-dominance: `a` lies on every path from `b` to EXIT.
  bool post_dominates(CfgNode a, CfgNode b) const;
};

/// Throws GraphError("exit-unreachable node N") when some node cannot reach EXIT.
PostDominatorTree post_dominators(const ControlFlowGraph& cfg);

/// Pairs (controller, dependent), including self-dependence of loop headers
/// and edges out of ENTRY.
std::set<std::pair<CfgNode, CfgNode>> control_dependence(const ControlFlowGraph& cfg, const PostDominatorTree& pdt);

struct Definition {
  std::string var;
  CfgNode site = 0;

  auto operator<=>(const Definition&) const = default;
};

using DefinitionSet = std::set<Definition>;

struct ReachingDefinitions {
  std::vector<DefinitionSet> in;
  std::vector<DefinitionSet> out;
  int iterations = 0;  ///< sweeps until no OUT set changed, including the last
};

/// Called after every sweep with the current solution.
using ReachingObserver = std::function<void(const ReachingDefinitions&)>;

ReachingDefinitions reaching_definitions(const ControlFlowGraph& cfg, const ReachingObserver& observer = {});

struct DataDependence {
  CfgNode def_site = 0;
  CfgNode use_site = 0;
  std::string var;

  auto operator<=>(const DataDependence&) const = default;
};

std::set<DataDependence> data_dependence(const ControlFlowGraph& cfg, const ReachingDefinitions& rd);

}  // namespace vulnpath
