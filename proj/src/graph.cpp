#include "vulnpath/graph.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

std::string to_string(NodeId id) { return std::to_string(id.value); }

std::string_view to_string(EdgeKind kind) { return kind == EdgeKind::control ? "control" : "data"; }

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  if (text == "control") return EdgeKind::control;
  if (text == "data") return EdgeKind::data;
  return std::nullopt;
}

std::string_view to_string(SinkKind kind) {
  switch (kind) {
    case SinkKind::FC: return "FC";
    case SinkKind::AU: return "AU";
    case SinkKind::PU: return "PU";
    case SinkKind::AE: return "AE";
  }
  return "?";
}

std::optional<SinkKind> parse_sink_kind(std::string_view text) {
  if (text == "FC") return SinkKind::FC;
  if (text == "AU") return SinkKind::AU;
  if (text == "PU") return SinkKind::PU;
  if (text == "AE") return SinkKind::AE;
  return std::nullopt;
}

const StatementNode* ProgramDependenceGraph::find(NodeId node) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const StatementNode& n) { return n.id == node; });
  return it == nodes.end() ? nullptr : &*it;
}

ProgramDependenceGraph canonicalize(ProgramDependenceGraph graph) {
  std::sort(graph.nodes.begin(), graph.nodes.end(),
            [](const StatementNode& a, const StatementNode& b) { return a.id < b.id; });
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string edge_name(const DependenceEdge& e) {
  return fmt::format("edge {}→{}", e.src.value, e.dst.value);
}

}  // namespace

std::vector<std::string> validate(const ProgramDependenceGraph& graph) {
  std::vector<std::string> out;
  std::set<NodeId> ids;
  for (const auto& n : graph.nodes) {
    if (!ids.insert(n.id).second) out.push_back(fmt::format("node {}: duplicate id", n.id.value));
    if (n.line < 1) out.push_back(fmt::format("node {}: line {} < 1", n.id.value, n.line));
    if (blank(n.code)) out.push_back(fmt::format("node {}: empty code", n.id.value));
  }
  std::set<DependenceEdge> seen;
  for (const auto& e : graph.edges) {
    const auto name = edge_name(e);
    if (!ids.count(e.src)) out.push_back(fmt::format("{}: unknown node {}", name, e.src.value));
    if (!ids.count(e.dst)) out.push_back(fmt::format("{}: unknown node {}", name, e.dst.value));
    if (e.src == e.dst) out.push_back(fmt::format("{}: self-loop", name));
    if (e.kind == EdgeKind::data && e.var.empty()) out.push_back(fmt::format("{}: data edge without var", name));
    if (e.kind == EdgeKind::control && !e.var.empty())
      out.push_back(fmt::format("{}: control edge carries var \"{}\"", name, e.var));
    if (!seen.insert(e).second)
      out.push_back(fmt::format("{}: duplicate {} edge{}", name, to_string(e.kind),
                                e.var.empty() ? std::string{} : " var \"" + e.var + "\""));
  }
  return out;
}

std::set<std::pair<NodeId, DependenceEdge>> predecessors(const ProgramDependenceGraph& graph, NodeId node,
                                                         std::optional<EdgeKind> kind_filter) {
  if (!graph.contains(node)) throw GraphError("node not found: " + to_string(node));
  std::set<std::pair<NodeId, DependenceEdge>> out;
  for (const auto& e : graph.edges) {
    if (e.dst != node) continue;
    if (kind_filter && e.kind != *kind_filter) continue;
    out.emplace(e.src, e);
  }
  return out;
}

ProgramDependenceGraph induced_subgraph(const ProgramDependenceGraph& graph, const std::set<NodeId>& node_set) {
  ProgramDependenceGraph sub;
  sub.id = graph.id;
  for (NodeId id : node_set) {
    const auto* n = graph.find(id);
    if (n == nullptr) throw GraphError("node not found: " + to_string(id));
  }
  for (const auto& n : graph.nodes)
    if (node_set.count(n.id)) sub.nodes.push_back(n);
  for (const auto& e : graph.edges)
    if (node_set.count(e.src) && node_set.count(e.dst)) sub.edges.push_back(e);
  return sub;
}

GraphIndex::GraphIndex(const ProgramDependenceGraph& graph) : graph_(&graph) {
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) by_id_.emplace(graph.nodes[i].id, i);
  in_edges_.resize(graph.nodes.size());
  for (const auto& e : graph.edges) {
    auto it = by_id_.find(e.dst);
    if (it == by_id_.end() || !by_id_.count(e.src))
      throw GraphError(fmt::format("edge {}: unknown endpoint", edge_name(e)));
    in_edges_[it->second].push_back(e);
  }
  for (auto& list : in_edges_) {
    std::sort(list.begin(), list.end(), [](const DependenceEdge& a, const DependenceEdge& b) {
      return std::tie(a.src, a.kind, a.var) < std::tie(b.src, b.kind, b.var);
    });
  }
}

const StatementNode& GraphIndex::node(NodeId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw GraphError("node not found: " + to_string(id));
  return graph_->nodes[it->second];
}

std::span<const DependenceEdge> GraphIndex::in_edges(NodeId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw GraphError("node not found: " + to_string(id));
  return in_edges_[it->second];
}

std::vector<LineOfCode> program_order(const FlowPath& path, const ProgramDependenceGraph& graph) {
  std::vector<LineOfCode> out;
  out.reserve(path.nodes.size());
  for (NodeId id : path.nodes) {
    const auto* n = graph.find(id);
    if (n == nullptr) throw GraphError("node not found: " + to_string(id));
    out.push_back({n->line, n->code, n->id});
  }
  std::sort(out.begin(), out.end(),
            [](const LineOfCode& a, const LineOfCode& b) { return std::tie(a.line, a.node) < std::tie(b.line, b.node); });
  return out;
}

std::vector<NodeId> program_ordered_nodes(const FlowPath& path, const ProgramDependenceGraph& graph) {
  std::vector<NodeId> out;
  for (const auto& loc : program_order(path, graph)) out.push_back(loc.node);
  return out;
}

std::string render_lines(const FlowPath& path, const ProgramDependenceGraph& graph) {
  std::string out;
  for (const auto& loc : program_order(path, graph)) {
    if (!out.empty()) out += " -- ";
    out += std::to_string(loc.line);
  }
  return out;
}

std::vector<std::string> validate(const LabeledSample& sample) {
  auto out = validate(sample.pdg);
  const bool vulnerable = sample.label == Label::vulnerable;
  if (vulnerable && sample.vuln_lines.empty()) out.push_back("vulnerable sample has no vuln_lines");
  if (!vulnerable && !sample.vuln_lines.empty()) out.push_back("safe sample lists vuln_lines");
  std::set<int> lines;
  for (const auto& n : sample.pdg.nodes) lines.insert(n.line);
  for (int line : sample.vuln_lines)
    if (!lines.count(line)) out.push_back(fmt::format("vuln line {} is not the line of any node", line));
  return out;
}

}  // namespace vulnpath
