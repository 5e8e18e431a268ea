#include "vulnpath/pdg_builder.hpp"

namespace vulnpath {

ProgramDependenceGraph pdg_from_program(const Program& program, std::string id) {
  const auto cfg = build_cfg(program);
  const auto pdt = post_dominators(cfg);
  const auto rd = reaching_definitions(cfg);

  ProgramDependenceGraph pdg;
  pdg.id = std::move(id);
  for (const auto& s : program.statements) {
    if (s.kind == StmtKind::block_delim) continue;
    pdg.nodes.push_back({NodeId(s.line), s.line, s.code});
  }

  std::set<DependenceEdge> edges;
  auto lift = [&](CfgNode from, CfgNode to, EdgeKind kind, const std::string& var) {
    if (from == kEntry || from == kExit || to == kEntry || to == kExit) return;
    const int a = cfg.vertex(from).line;
    const int b = cfg.vertex(to).line;
    if (a == b) return;
    edges.insert({NodeId(a), NodeId(b), kind, var});
  };
  for (const auto& [u, w] : control_dependence(cfg, pdt)) lift(u, w, EdgeKind::control, {});
  for (const auto& d : data_dependence(cfg, rd)) lift(d.def_site, d.use_site, EdgeKind::data, d.var);
  pdg.edges.assign(edges.begin(), edges.end());
  return canonicalize(std::move(pdg));
}

ProgramDependenceGraph build_pdg(std::string_view source, std::string id, const FrontendOptions& options) {
  return pdg_from_program(parse_minic(source, options), std::move(id));
}

}  // namespace vulnpath
