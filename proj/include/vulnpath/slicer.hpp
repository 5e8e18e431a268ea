#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "vulnpath/graph.hpp"

namespace vulnpath {

struct SliceParams {
  int k = 5;              ///< node cap per path, >= 1
  double sparsity = 0.5;  ///< in [0, 1)
};

/// Throws ValidationError for k < 1 or sparsity outside [0, 1).
void check(const SliceParams& params);

/// max(1, min(k, floor((1 - sparsity) * m))). Throws ValidationError if m < 1.
int max_nodes(const SliceParams& params, std::size_t m);

/// Predecessors followed from `node`. At the sink itself data edges must carry
/// one of the sink's key variables; elsewhere every in-edge counts.
std::set<NodeId> extract_prec_nodes(const GraphIndex& index, NodeId node, const SinkPoint& psp);
std::set<NodeId> extract_prec_nodes(const ProgramDependenceGraph& pdg, NodeId node, const SinkPoint& psp);

/// Maximal backward simple paths from every sink, at most max_nodes long,
/// sorted by node sequence (so by sink first) with duplicates removed. A path
/// whose node sequence repeats an earlier one keeps the earlier sink.
std::vector<FlowPath> generate_slices(const ProgramDependenceGraph& pdg, const SliceParams& params,
                                      const std::vector<SinkPoint>& sinks);

/// Drops later paths whose node sequence already occurred.
std::vector<FlowPath> dedup_paths(std::vector<FlowPath> paths);

}  // namespace vulnpath
