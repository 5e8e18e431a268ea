#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vulnpath/graph.hpp"

namespace vulnpath {

using Json = nlohmann::ordered_json;

/// Decodes a PDG object. `path` prefixes JSON paths in errors and warnings.
/// Unknown keys are reported through `warnings`. Throws SchemaError for shape
/// problems and ValidationError when the graph violates its invariants.
ProgramDependenceGraph pdg_from_json(const Json& value, const std::string& path = {},
                                     std::vector<std::string>* warnings = nullptr);

/// Canonical object: keys id, nodes, edges; nodes by id, edges sorted.
Json pdg_to_json(const ProgramDependenceGraph& pdg);

ProgramDependenceGraph read_pdg_json(std::string_view bytes, std::vector<std::string>* warnings = nullptr);

/// Compact single-line JSON without trailing newline, or indented when
/// `indent` >= 0.
std::string write_pdg_json(const ProgramDependenceGraph& pdg, int indent = -1);

struct Dataset {
  std::vector<LabeledSample> samples;
  std::size_t duplicates = 0;         ///< records dropped as exact PDG duplicates
  std::vector<std::string> warnings;  ///< unknown fields, conflicting labels
};

/// JSONL: one {"pdg","label","vuln_lines","cwe"} object per line. Blank lines
/// are skipped. Throws DatasetError carrying the 1-based line number.
Dataset parse_dataset(std::string_view text);
Dataset read_dataset(const std::filesystem::path& path);

Json sample_to_json(const LabeledSample& sample);
std::string write_dataset(const std::vector<LabeledSample>& samples);
void write_dataset(const std::filesystem::path& path, const std::vector<LabeledSample>& samples);

/// Graphviz digraph. Control edges solid, data edges dashed with the variable
/// as label. Nodes and edges of `highlight` are drawn in red.
std::string export_dot(const ProgramDependenceGraph& pdg, const std::optional<FlowPath>& highlight = std::nullopt);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace vulnpath
