#include "vulnpath/slicer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

void check(const SliceParams& params) {
  if (params.k < 1) throw ValidationError(fmt::format("k must be >= 1 (got {})", params.k));
  if (!(params.sparsity >= 0.0 && params.sparsity < 1.0))
    throw ValidationError(fmt::format("sparsity must be in [0, 1) (got {})", params.sparsity));
}

int max_nodes(const SliceParams& params, std::size_t m) {
  check(params);
  if (m < 1) throw ValidationError("graph has no nodes");
  // The epsilon keeps products such as 0.7 * 10 from flooring to 6.
  const double budget = std::floor((1.0 - params.sparsity) * static_cast<double>(m) + 1e-9);
  const double capped = std::min(static_cast<double>(params.k), budget);
  return std::max(1, static_cast<int>(capped));
}

std::set<NodeId> extract_prec_nodes(const GraphIndex& index, NodeId node, const SinkPoint& psp) {
  std::set<NodeId> out;
  const bool at_sink = node == psp.node;
  for (const auto& e : index.in_edges(node)) {
    if (at_sink && e.kind == EdgeKind::data && !psp.key_vars.count(e.var)) continue;
    out.insert(e.src);
  }
  return out;
}

std::set<NodeId> extract_prec_nodes(const ProgramDependenceGraph& pdg, NodeId node, const SinkPoint& psp) {
  return extract_prec_nodes(GraphIndex(pdg), node, psp);
}

namespace {

struct Dfs {
  const GraphIndex& index;
  const SinkPoint& psp;
  std::size_t budget;
  std::vector<FlowPath>& out;
  std::vector<NodeId> path;
  std::set<NodeId> on_path;

  void run(NodeId n) {
    path.push_back(n);
    on_path.insert(n);
    if (path.size() >= budget) {
      emit();
    } else {
      bool extended = false;
      for (NodeId p : extract_prec_nodes(index, n, psp)) {
        if (on_path.count(p)) continue;
        extended = true;
        run(p);
      }
      if (!extended) emit();
    }
    on_path.erase(n);
    path.pop_back();
  }

  void emit() { out.push_back({path, psp}); }
};

}  // namespace

std::vector<FlowPath> generate_slices(const ProgramDependenceGraph& pdg, const SliceParams& params,
                                      const std::vector<SinkPoint>& sinks) {
  check(params);
  std::vector<FlowPath> out;
  if (sinks.empty() || pdg.nodes.empty()) return out;
  const GraphIndex index(pdg);
  const auto budget = static_cast<std::size_t>(max_nodes(params, pdg.nodes.size()));
  for (const auto& sink : sinks) {
    if (!index.contains(sink.node)) throw GraphError("sink node not found: " + to_string(sink.node));
    Dfs{index, sink, budget, out, {}, {}}.run(sink.node);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FlowPath& a, const FlowPath& b) { return a.nodes < b.nodes; });
  return dedup_paths(std::move(out));
}

std::vector<FlowPath> dedup_paths(std::vector<FlowPath> paths) {
  std::set<std::vector<NodeId>> seen;
  std::vector<FlowPath> out;
  out.reserve(paths.size());
  for (auto& p : paths)
    if (seen.insert(p.nodes).second) out.push_back(std::move(p));
  return out;
}

}  // namespace vulnpath
