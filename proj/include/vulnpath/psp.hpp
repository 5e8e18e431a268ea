#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpath/graph.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/lexer.hpp"

namespace vulnpath {

struct SinkConfigOverride {
  std::map<std::string, std::vector<int>> fc_apis;  ///< merged into the base table
  std::optional<std::set<SinkKind>> enabled;         ///< replaces the base set
};

struct SinkConfig {
  /// API name -> key argument positions. An empty list selects every argument.
  std::map<std::string, std::vector<int>> fc_apis;
  std::set<SinkKind> enabled{SinkKind::FC, SinkKind::AU, SinkKind::PU, SinkKind::AE};
  std::map<std::string, SinkConfigOverride> cwe_overrides;
  /// Drop `x++`/`x--` when a condition comparing x guards it, either inside the
  /// same statement or as a direct control predecessor.
  bool guard_heuristic = true;

  static SinkConfig defaults();
  /// Effective configuration for samples tagged `cwe`.
  SinkConfig for_cwe(std::string_view cwe) const;
};

/// Throws SchemaError naming the offending JSON path.
SinkConfig parse_sink_config(const Json& value);
SinkConfig load_sink_config(const std::filesystem::path& path);
Json sink_config_to_json(const SinkConfig& config);

struct SinkMatch {
  SinkKind kind = SinkKind::FC;
  std::string detail;  ///< matched expressions, "; "-separated when several
  std::set<std::string> key_vars;

  bool operator==(const SinkMatch&) const = default;
};

/// Lexical classification of one statement, at most one match per kind, in
/// kind order FC, AU, PU, AE. Strict lexing throws LexError.
std::vector<SinkMatch> classify_statement(std::string_view code, const SinkConfig& config,
                                          LexMode mode = LexMode::strict);

/// Variables of a single matched expression under the rule of `kind`.
std::set<std::string> key_variables(SinkKind kind, std::string_view matched_expression, const SinkConfig& config);

/// Sinks of every node, ordered by node id then kind. Besides the in-statement
/// guard, `x++` is also dropped when a direct control predecessor compares x.
std::vector<SinkPoint> extract_sink_nodes(const ProgramDependenceGraph& pdg, const SinkConfig& config);

}  // namespace vulnpath
