#pragma once

#include <string>
#include <string_view>

#include "vulnpath/dataflow.hpp"
#include "vulnpath/graph.hpp"
#include "vulnpath/minic.hpp"

namespace vulnpath {

/// Lifts CFG-level dependences onto a statement graph whose node ids are
/// source lines. ENTRY/EXIT edges and edges between two nodes of the same
/// line (for-header init and head, loop header self-dependence) are dropped.
ProgramDependenceGraph pdg_from_program(const Program& program, std::string id);

/// parse_minic + build_cfg + dependence analyses. Throws ParseError.
ProgramDependenceGraph build_pdg(std::string_view source, std::string id, const FrontendOptions& options = {});

}  // namespace vulnpath
