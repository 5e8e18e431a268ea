#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpath/lexer.hpp"

namespace vulnpath {

enum class StmtKind { decl, assign, call, if_header, while_header, for_header, return_stmt, block_delim };

std::string_view to_string(StmtKind kind);

/// Variables touched by one evaluation of a statement. `kills` is the subset
/// of `defs` that are strong updates (plain assignment or declaration);
/// partial writes such as `a[i] = v` or out-parameters define without killing.
struct Access {
  std::set<std::string> defs;
  std::set<std::string> kills;
  std::set<std::string> uses;

  bool operator==(const Access&) const = default;
  void merge(const Access& other);
};

struct MiniCStatement {
  int line = 0;
  StmtKind kind = StmtKind::block_delim;
  std::string code;
  std::set<std::string> defs;  ///< whole statement
  std::set<std::string> uses;  ///< whole statement
  /// What is evaluated each time control reaches the statement. For a
  /// for-header this is the condition plus the step clause.
  Access head;
  /// Init clause of a for-header, evaluated once before the loop.
  std::optional<Access> for_init;
};

/// Nesting structure over `Program::statements`.
struct StructuredStmt {
  std::size_t stmt = 0;
  std::vector<StructuredStmt> body;       ///< then-branch or loop body
  std::vector<StructuredStmt> else_body;
  bool has_else = false;
};

struct Program {
  std::optional<std::string> function_name;
  std::vector<MiniCStatement> statements;  ///< one per code line, source order
  std::vector<StructuredStmt> body;
};

struct FrontendOptions {
  /// Calls whose listed argument positions are written through (the
  /// argument's base variable becomes a non-killing definition).
  std::map<std::string, std::vector<int>, std::less<>> out_params = default_out_params();

  static std::map<std::string, std::vector<int>, std::less<>> default_out_params();
};

/// Parses one MiniC function (or a bare statement list). Throws ParseError.
Program parse_minic(std::string_view source, const FrontendOptions& options = {});

/// Def/use of a single simple statement (declaration, assignment, call,
/// return). Exposed for tests and for reuse by the sink classifier.
struct SimpleStatement {
  StmtKind kind = StmtKind::call;
  Access access;
};
SimpleStatement analyze_simple_statement(const std::vector<Token>& tokens, int line, const FrontendOptions& options);

/// Identifiers read by an expression: excludes callee names, member names
/// after `.`/`->`, keywords and type names.
std::set<std::string> expression_identifiers(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

}  // namespace vulnpath
