#include "vulnpath/dataflow.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

ControlFlowGraph::ControlFlowGraph() {
  vertices_.resize(2);
  vertices_[kEntry].code = "ENTRY";
  vertices_[kExit].code = "EXIT";
  succ_.resize(2);
  pred_.resize(2);
}

CfgNode ControlFlowGraph::add_node(int line, Access access, std::string code) {
  vertices_.push_back({line, std::move(access), std::move(code)});
  succ_.emplace_back();
  pred_.emplace_back();
  return vertices_.size() - 1;
}

void ControlFlowGraph::add_edge(CfgNode from, CfgNode to) {
  if (from >= size() || to >= size()) throw GraphError(fmt::format("cfg edge {}->{}: unknown node", from, to));
  auto& s = succ_[from];
  auto it = std::lower_bound(s.begin(), s.end(), to);
  if (it != s.end() && *it == to) return;
  s.insert(it, to);
  auto& p = pred_[to];
  p.insert(std::lower_bound(p.begin(), p.end(), from), from);
}

bool ControlFlowGraph::has_edge(CfgNode from, CfgNode to) const {
  return std::binary_search(succ_.at(from).begin(), succ_.at(from).end(), to);
}

std::size_t ControlFlowGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : succ_) n += s.size();
  return n;
}

namespace {

std::vector<CfgNode> post_order(CfgNode root, std::size_t n, const std::vector<std::vector<CfgNode>>& next) {
  std::vector<CfgNode> order;
  std::vector<char> seen(n, 0);
  std::vector<std::pair<CfgNode, std::size_t>> stack{{root, 0}};
  seen[root] = 1;
  while (!stack.empty()) {
    auto& [node, i] = stack.back();
    if (i < next[node].size()) {
      const CfgNode v = next[node][i++];
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back({v, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

std::vector<CfgNode> ControlFlowGraph::reverse_post_order() const {
  auto order = post_order(kEntry, size(), succ_);
  std::reverse(order.begin(), order.end());
  return order;
}

namespace {

class CfgBuilder {
 public:
  explicit CfgBuilder(const Program& program) : program_(program) {}

  ControlFlowGraph run() {
    auto frontier = build(program_.body, {kEntry});
    for (CfgNode f : frontier) cfg_.add_edge(f, kExit);
    return std::move(cfg_);
  }

 private:
  using Frontier = std::vector<CfgNode>;

  void connect(const Frontier& from, CfgNode to) {
    for (CfgNode f : from) cfg_.add_edge(f, to);
  }

  CfgNode add(const MiniCStatement& s, const Access& access) { return cfg_.add_node(s.line, access, s.code); }

  Frontier build(const std::vector<StructuredStmt>& block, Frontier frontier) {
    for (const auto& node : block) {
      const auto& s = program_.statements.at(node.stmt);
      if (s.kind == StmtKind::block_delim) continue;
      if (frontier.empty()) throw ParseError(s.line, "unreachable statement after return");
      switch (s.kind) {
        case StmtKind::if_header: {
          const CfgNode h = add(s, s.head);
          connect(frontier, h);
          Frontier joined = build(node.body, {h});
          Frontier other = node.has_else ? build(node.else_body, {h}) : Frontier{h};
          joined.insert(joined.end(), other.begin(), other.end());
          std::sort(joined.begin(), joined.end());
          joined.erase(std::unique(joined.begin(), joined.end()), joined.end());
          frontier = std::move(joined);
          break;
        }
        case StmtKind::while_header:
        case StmtKind::for_header: {
          if (s.for_init) {
            const CfgNode init = add(s, *s.for_init);
            connect(frontier, init);
            frontier = {init};
          }
          const CfgNode h = add(s, s.head);
          connect(frontier, h);
          connect(build(node.body, {h}), h);
          frontier = {h};
          break;
        }
        case StmtKind::return_stmt: {
          const CfgNode r = add(s, s.head);
          connect(frontier, r);
          cfg_.add_edge(r, kExit);
          frontier.clear();
          break;
        }
        default: {
          const CfgNode n = add(s, s.head);
          connect(frontier, n);
          frontier = {n};
        }
      }
    }
    return frontier;
  }

  const Program& program_;
  ControlFlowGraph cfg_;
};

}  // namespace

ControlFlowGraph build_cfg(const Program& program) { return CfgBuilder(program).run(); }

bool PostDominatorTree::post_dominates(CfgNode a, CfgNode b) const {
  for (std::optional<CfgNode> cur = b; cur; cur = ipdom.at(*cur))
    if (*cur == a) return true;
  return false;
}

PostDominatorTree post_dominators(const ControlFlowGraph& cfg) {
  const std::size_t n = cfg.size();
  std::vector<std::vector<CfgNode>> reverse(n);
  for (CfgNode v = 0; v < n; ++v) reverse[v] = cfg.predecessors(v);

  // Cooper, Harvey & Kennedy iterative dominators on the reversed graph.
  const auto po = post_order(kExit, n, reverse);
  if (po.size() != n) {
    std::vector<char> seen(n, 0);
    for (CfgNode v : po) seen[v] = 1;
    for (CfgNode v = 0; v < n; ++v)
      if (!seen[v]) throw GraphError(fmt::format("exit-unreachable node {}", v));
  }
  std::vector<std::size_t> po_index(n);
  for (std::size_t i = 0; i < po.size(); ++i) po_index[po[i]] = i;

  constexpr CfgNode undefined = static_cast<CfgNode>(-1);
  std::vector<CfgNode> idom(n, undefined);
  idom[kExit] = kExit;
  auto intersect = [&](CfgNode a, CfgNode b) {
    while (a != b) {
      while (po_index[a] < po_index[b]) a = idom[a];
      while (po_index[b] < po_index[a]) b = idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = po.rbegin(); it != po.rend(); ++it) {
      const CfgNode b = *it;
      if (b == kExit) continue;
      CfgNode next = undefined;
      for (CfgNode p : cfg.successors(b)) {
        if (idom[p] == undefined) continue;
        next = next == undefined ? p : intersect(p, next);
      }
      if (next != idom[b]) {
        idom[b] = next;
        changed = true;
      }
    }
  }

  PostDominatorTree tree;
  tree.ipdom.resize(n);
  for (CfgNode v = 0; v < n; ++v)
    if (v != kExit) tree.ipdom[v] = idom[v];
  return tree;
}

std::set<std::pair<CfgNode, CfgNode>> control_dependence(const ControlFlowGraph& cfg, const PostDominatorTree& pdt) {
  std::set<std::pair<CfgNode, CfgNode>> out;
  for (CfgNode u = 0; u < cfg.size(); ++u) {
    if (u == kExit) continue;
    const auto stop = pdt.ipdom.at(u);
    for (CfgNode v : cfg.successors(u)) {
      for (std::optional<CfgNode> w = v; w && w != stop; w = pdt.ipdom.at(*w)) out.emplace(u, *w);
    }
  }
  return out;
}

ReachingDefinitions reaching_definitions(const ControlFlowGraph& cfg, const ReachingObserver& observer) {
  const std::size_t n = cfg.size();
  ReachingDefinitions rd;
  rd.in.resize(n);
  rd.out.resize(n);

  // Nodes not reachable from ENTRY still get a (gen-only) solution.
  auto order = cfg.reverse_post_order();
  {
    std::vector<char> seen(n, 0);
    for (CfgNode v : order) seen[v] = 1;
    for (CfgNode v = 0; v < n; ++v)
      if (!seen[v]) order.push_back(v);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    ++rd.iterations;
    for (CfgNode v : order) {
      DefinitionSet in;
      for (CfgNode p : cfg.predecessors(v)) in.insert(rd.out[p].begin(), rd.out[p].end());
      const Access& acc = cfg.vertex(v).access;
      DefinitionSet out;
      for (const auto& d : in)
        if (!acc.kills.count(d.var)) out.insert(d);
      for (const auto& x : acc.defs) out.insert({x, v});
      rd.in[v] = std::move(in);
      if (out != rd.out[v]) {
        rd.out[v] = std::move(out);
        changed = true;
      }
    }
    if (observer) observer(rd);
  }
  return rd;
}

std::set<DataDependence> data_dependence(const ControlFlowGraph& cfg, const ReachingDefinitions& rd) {
  std::set<DataDependence> out;
  for (CfgNode u = 0; u < cfg.size(); ++u) {
    const auto& uses = cfg.vertex(u).access.uses;
    for (const auto& d : rd.in.at(u))
      if (uses.count(d.var)) out.insert({d.site, u, d.var});
  }
  return out;
}

}  // namespace vulnpath
