#include "vulnpath/minic.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "vulnpath/error.hpp"

namespace vulnpath {

std::string_view to_string(StmtKind kind) {
  switch (kind) {
    case StmtKind::decl: return "decl";
    case StmtKind::assign: return "assign";
    case StmtKind::call: return "call";
    case StmtKind::if_header: return "if-header";
    case StmtKind::while_header: return "while-header";
    case StmtKind::for_header: return "for-header";
    case StmtKind::return_stmt: return "return";
    case StmtKind::block_delim: return "block-delim";
  }
  return "?";
}

void Access::merge(const Access& other) {
  defs.insert(other.defs.begin(), other.defs.end());
  kills.insert(other.kills.begin(), other.kills.end());
  uses.insert(other.uses.begin(), other.uses.end());
}

std::map<std::string, std::vector<int>, std::less<>> FrontendOptions::default_out_params() {
  return {{"strcpy", {0}}, {"strncpy", {0}}, {"memcpy", {0}}, {"memmove", {0}}, {"memset", {0}},
          {"sprintf", {0}}, {"fgets", {0}},   {"recv", {1}},   {"read", {1}}};
}

namespace {

bool is_assign_op(const Token& t) {
  if (t.kind != TokenKind::punct) return false;
  static const std::set<std::string, std::less<>> ops = {"=",  "+=", "-=", "*=", "/=", "%=",
                                                         "&=", "|=", "^=", "<<=", ">>="};
  return ops.count(t.text) != 0;
}

bool is_open(const Token& t) { return t.kind == TokenKind::punct && (t.is("(") || t.is("[") || t.is("{")); }
bool is_close(const Token& t) { return t.kind == TokenKind::punct && (t.is(")") || t.is("]") || t.is("}")); }

bool balanced(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  std::vector<char> stack;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = tokens[i];
    if (t.kind != TokenKind::punct) continue;
    if (t.is("(") || t.is("[") || t.is("{")) stack.push_back(t.text[0]);
    else if (is_close(t)) {
      const char want = t.is(")") ? '(' : t.is("]") ? '[' : '{';
      if (stack.empty() || stack.back() != want) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

/// Splits [begin, end) at top-level occurrences of `sep`.
std::vector<std::pair<std::size_t, std::size_t>> split_top_level(const std::vector<Token>& tokens, std::size_t begin,
                                                                 std::size_t end, std::string_view sep) {
  std::vector<std::pair<std::size_t, std::size_t>> parts;
  int depth = 0;
  std::size_t start = begin;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = tokens[i];
    if (is_open(t)) ++depth;
    else if (is_close(t)) --depth;
    else if (depth == 0 && t.kind == TokenKind::punct && t.text == sep) {
      parts.emplace_back(start, i);
      start = i + 1;
    }
  }
  parts.emplace_back(start, end);
  return parts;
}

bool is_variable_token(const std::vector<Token>& tokens, std::size_t i, std::size_t end) {
  const auto& t = tokens[i];
  if (t.kind != TokenKind::identifier || is_type_word(t.text)) return false;
  if (i + 1 < end && tokens[i + 1].is("(")) return false;  // callee
  if (i > 0 && tokens[i - 1].kind == TokenKind::punct && (tokens[i - 1].is(".") || tokens[i - 1].is("->")))
    return false;  // member
  return true;
}

std::optional<std::string> first_variable(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i)
    if (is_variable_token(tokens, i, end)) return tokens[i].text;
  return std::nullopt;
}

/// Non-killing defs introduced by out-parameters of known APIs inside [begin, end).
void add_out_param_defs(const std::vector<Token>& tokens, std::size_t begin, std::size_t end,
                        const FrontendOptions& options, Access& access) {
  for (std::size_t i = begin; i + 1 < end; ++i) {
    if (tokens[i].kind != TokenKind::identifier || !tokens[i + 1].is("(")) continue;
    auto it = options.out_params.find(tokens[i].text);
    if (it == options.out_params.end()) continue;
    const std::size_t close = matching_close(tokens, i + 1);
    if (close == std::string::npos || close >= end) continue;
    const auto args = split_top_level(tokens, i + 2, close, ",");
    for (int pos : it->second) {
      if (pos < 0 || static_cast<std::size_t>(pos) >= args.size()) continue;
      if (auto base = first_variable(tokens, args[pos].first, args[pos].second)) {
        access.defs.insert(*base);
        access.uses.insert(*base);
      }
    }
  }
}

void add_expression(const std::vector<Token>& tokens, std::size_t begin, std::size_t end,
                    const FrontendOptions& options, Access& access) {
  auto ids = expression_identifiers(tokens, begin, end);
  access.uses.insert(ids.begin(), ids.end());
  add_out_param_defs(tokens, begin, end, options, access);
}

/// Assignment target. A bare identifier is a strong def; element, member and
/// pointee writes are partial defs of the base variable, which is also read.
void add_lvalue(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, bool compound, int line,
                const FrontendOptions& options, Access& access) {
  while (begin + 1 < end && tokens[begin].is("(") && matching_close(tokens, begin) == end - 1) {
    ++begin;
    --end;
  }
  if (begin >= end) throw ParseError(line, "assignment target");
  if (end - begin == 1) {
    if (!is_variable_token(tokens, begin, end)) throw ParseError(line, "variable as assignment target");
    const auto& name = tokens[begin].text;
    access.defs.insert(name);
    access.kills.insert(name);
    if (compound) access.uses.insert(name);
    return;
  }
  auto base = first_variable(tokens, begin, end);
  if (!base) throw ParseError(line, "variable in assignment target");
  access.defs.insert(*base);
  access.uses.insert(*base);
  add_expression(tokens, begin, end, options, access);
}

/// `x++`, `--p`, `a[i]++`; returns false when the tokens are not an inc/dec.
bool add_incdec(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, int line,
                const FrontendOptions& options, Access& access) {
  if (end - begin < 2) return false;
  if (tokens[begin].is("++") || tokens[begin].is("--")) {
    add_lvalue(tokens, begin + 1, end, true, line, options, access);
    return true;
  }
  if (tokens[end - 1].is("++") || tokens[end - 1].is("--")) {
    add_lvalue(tokens, begin, end - 1, true, line, options, access);
    return true;
  }
  return false;
}

bool contains_call(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i + 1 < end; ++i)
    if (tokens[i].kind == TokenKind::identifier && tokens[i + 1].is("(")) return true;
  return false;
}

/// Assignment / inc-dec / call expression (no declaration).
StmtKind analyze_expression_statement(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, int line,
                                      const FrontendOptions& options, Access& access) {
  std::vector<std::size_t> ops;
  int depth = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (is_open(tokens[i])) ++depth;
    else if (is_close(tokens[i])) --depth;
    else if (depth == 0 && is_assign_op(tokens[i])) ops.push_back(i);
  }
  if (!ops.empty()) {
    // a = b = c: every segment but the last is a target.
    std::size_t seg_begin = begin;
    for (std::size_t op : ops) {
      add_lvalue(tokens, seg_begin, op, !tokens[op].is("="), line, options, access);
      seg_begin = op + 1;
    }
    if (seg_begin >= end) throw ParseError(line, "expression after '" + tokens[ops.back()].text + "'");
    add_expression(tokens, seg_begin, end, options, access);
    return StmtKind::assign;
  }
  if (add_incdec(tokens, begin, end, line, options, access)) return StmtKind::assign;
  if (contains_call(tokens, begin, end)) {
    add_expression(tokens, begin, end, options, access);
    return StmtKind::call;
  }
  throw ParseError(line, "declaration, assignment, call or return");
}

void analyze_declaration(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, int line,
                         const FrontendOptions& options, Access& access) {
  std::size_t i = begin;
  while (i < end && (is_type_word(tokens[i].text) && tokens[i].kind != TokenKind::punct)) {
    const bool tagged = tokens[i].is("struct") || tokens[i].is("union") || tokens[i].is("enum");
    ++i;
    if (tagged && i < end && tokens[i].kind == TokenKind::identifier) ++i;
  }
  if (i >= end) throw ParseError(line, "declarator name");
  for (auto [d_begin, d_end] : split_top_level(tokens, i, end, ",")) {
    std::size_t j = d_begin;
    while (j < d_end && (tokens[j].is("*") || tokens[j].is("const"))) ++j;
    if (j >= d_end || tokens[j].kind != TokenKind::identifier || is_type_word(tokens[j].text))
      throw ParseError(line, "declarator name");
    const std::string name = tokens[j].text;
    ++j;
    if (j < d_end && tokens[j].is("(")) throw ParseError(line, "variable declaration (function prototypes are not supported)");
    while (j < d_end && tokens[j].is("[")) {
      const std::size_t close = matching_close(tokens, j);
      if (close == std::string::npos || close >= d_end) throw ParseError(line, "']'");
      add_expression(tokens, j + 1, close, options, access);
      j = close + 1;
    }
    if (j < d_end) {
      if (!tokens[j].is("=")) throw ParseError(line, "'=', ',' or ';' in declaration");
      if (j + 1 >= d_end) throw ParseError(line, "initializer");
      add_expression(tokens, j + 1, d_end, options, access);
    }
    access.defs.insert(name);
    access.kills.insert(name);
  }
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Blanks out block comments (keeping newlines) so that line numbers survive.
std::string strip_block_comments(std::string_view source, int& unterminated_line) {
  std::string out(source);
  unterminated_line = 0;
  int line = 1;
  bool in_string = false;
  char quote = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const char c = out[i];
    if (c == '\n') {
      ++line;
      in_string = false;
      continue;
    }
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == quote) in_string = false;
      continue;
    }
    if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
      continue;
    }
    if (c == '/' && i + 1 < out.size() && out[i + 1] == '/') {
      while (i < out.size() && out[i] != '\n') out[i++] = ' ';
      --i;
      continue;
    }
    if (c == '/' && i + 1 < out.size() && out[i + 1] == '*') {
      const int start_line = line;
      std::size_t j = i;
      bool closed = false;
      while (j < out.size()) {
        if (out[j] == '*' && j + 1 < out.size() && out[j + 1] == '/') {
          out[j] = out[j + 1] = ' ';
          j += 2;
          closed = true;
          break;
        }
        if (out[j] == '\n') ++line;
        else out[j] = ' ';
        ++j;
      }
      if (!closed) {
        unterminated_line = start_line;
        return out;
      }
      i = j - 1;
    }
  }
  return out;
}

enum class ItemKind { open, close, else_kw, if_header, while_header, for_header, function, simple };

struct Item {
  ItemKind kind;
  std::size_t stmt;  // index into Program::statements
  int line;
};

class Parser {
 public:
  Parser(std::string_view source, const FrontendOptions& options) : options_(options) { tokenize_lines(source); }

  Program run() {
    if (!items_.empty() && items_.front().kind == ItemKind::function) {
      const Item fn = take();
      expect_open(fn.line, "'{' after function header");
      program_.body = parse_block();
      if (!items_.empty()) throw ParseError(items_.front().line, "end of input after function body");
    } else {
      while (!items_.empty()) {
        if (peek().kind == ItemKind::close) throw ParseError(peek().line, "statement (unmatched '}')");
        append(program_.body, parse_statement());
      }
    }
    return std::move(program_);
  }

 private:
  const Item& peek() const { return items_.front(); }
  Item take() {
    Item it = items_.front();
    items_.pop_front();
    return it;
  }
  int last_line() const { return program_.statements.empty() ? 1 : program_.statements.back().line; }

  void expect_open(int line, const std::string& what) {
    if (items_.empty() || peek().kind != ItemKind::open) throw ParseError(items_.empty() ? line : peek().line, what);
    take();
  }

  static void append(std::vector<StructuredStmt>& into, std::vector<StructuredStmt> more) {
    for (auto& s : more) into.push_back(std::move(s));
  }

  std::vector<StructuredStmt> parse_block() {
    std::vector<StructuredStmt> out;
    for (;;) {
      if (items_.empty()) throw ParseError(last_line(), "'}' before end of input");
      if (peek().kind == ItemKind::close) {
        take();
        return out;
      }
      append(out, parse_statement());
    }
  }

  std::vector<StructuredStmt> parse_body(int header_line) {
    if (items_.empty()) throw ParseError(header_line, "statement or '{' after header");
    if (peek().kind == ItemKind::open) {
      take();
      return parse_block();
    }
    if (peek().kind == ItemKind::close || peek().kind == ItemKind::else_kw)
      throw ParseError(peek().line, "statement or '{' after header");
    return parse_statement();
  }

  std::vector<StructuredStmt> parse_statement() {
    const Item it = take();
    switch (it.kind) {
      case ItemKind::simple:
        return {StructuredStmt{it.stmt, {}, {}, false}};
      case ItemKind::open:
        return parse_block();
      case ItemKind::if_header: {
        StructuredStmt s{it.stmt, parse_body(it.line), {}, false};
        if (!items_.empty() && peek().kind == ItemKind::else_kw) {
          const Item e = take();
          s.has_else = true;
          if (!items_.empty() && peek().kind == ItemKind::if_header && peek().line == e.line)
            s.else_body = parse_statement();
          else
            s.else_body = parse_body(e.line);
        }
        return {std::move(s)};
      }
      case ItemKind::while_header:
      case ItemKind::for_header:
        return {StructuredStmt{it.stmt, parse_body(it.line), {}, false}};
      case ItemKind::else_kw:
        throw ParseError(it.line, "statement ('else' without matching 'if')");
      case ItemKind::close:
        throw ParseError(it.line, "statement (unexpected '}')");
      case ItemKind::function:
        throw ParseError(it.line, "statement (function header must be the first line)");
    }
    throw ParseError(it.line, "statement");
  }

  void tokenize_lines(std::string_view source) {
    int unterminated = 0;
    const std::string text = strip_block_comments(source, unterminated);
    if (unterminated) throw ParseError(unterminated, "'*/' closing the comment");
    std::size_t pos = 0;
    int line = 0;
    bool first_code_line = true;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      ++line;
      const std::string_view raw(text.data() + pos, nl - pos);
      std::string code = trim(std::string_view(source).substr(pos, nl - pos));
      std::vector<Token> tokens;
      try {
        tokens = lex(raw, LexMode::strict);
      } catch (const LexError& e) {
        throw ParseError(line, std::string("valid token (") + e.what() + ")");
      }
      if (!tokens.empty()) {
        // Keep trailing line comments out of the node text.
        code = trim(std::string_view(raw).substr(0, tokens.back().offset + tokens.back().text.size()));
        classify_line(tokens, line, std::move(code), first_code_line);
        first_code_line = false;
      }
      if (nl == text.size()) break;
      pos = nl + 1;
    }
  }

  std::size_t add_statement(int line, StmtKind kind, std::string code) {
    MiniCStatement s;
    s.line = line;
    s.kind = kind;
    s.code = std::move(code);
    program_.statements.push_back(std::move(s));
    return program_.statements.size() - 1;
  }

  static std::size_t paren_group(const std::vector<Token>& tokens, std::size_t at, int line, const std::string& kw) {
    if (at >= tokens.size() || !tokens[at].is("(")) throw ParseError(line, "'(' after '" + kw + "'");
    const std::size_t close = matching_close(tokens, at);
    if (close == std::string::npos) throw ParseError(line, "')' closing the " + kw + " condition");
    if (!balanced(tokens, at, close + 1)) throw ParseError(line, "balanced brackets in the " + kw + " condition");
    return close;
  }

  void finish_header(const std::vector<Token>& tokens, std::size_t after, int line) {
    if (after == tokens.size()) return;
    if (after + 1 == tokens.size() && tokens[after].is("{")) {
      items_.push_back({ItemKind::open, program_.statements.size() - 1, line});
      return;
    }
    throw ParseError(line, "'{' or end of line after header");
  }

  void classify_line(const std::vector<Token>& tokens, int line, std::string code, bool first_code_line) {
    std::size_t pos = 0;
    const std::size_t n = tokens.size();

    if (first_code_line && is_function_header(tokens)) {
      const std::size_t idx = add_statement(line, StmtKind::block_delim, code);
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (tokens[i].kind == TokenKind::identifier && tokens[i + 1].is("(")) {
          program_.function_name = tokens[i].text;
          break;
        }
      items_.push_back({ItemKind::function, idx, line});
      if (tokens.back().is("{")) items_.push_back({ItemKind::open, idx, line});
      return;
    }

    std::vector<Item> prefix;
    if (tokens[pos].is("}")) {
      prefix.push_back({ItemKind::close, 0, line});
      ++pos;
    }
    if (pos < n && tokens[pos].is("else")) {
      prefix.push_back({ItemKind::else_kw, 0, line});
      ++pos;
    }

    const std::string kw = pos < n ? tokens[pos].text : std::string{};
    if (pos < n && tokens[pos].kind == TokenKind::keyword && (kw == "if" || kw == "while" || kw == "for")) {
      const std::size_t close = paren_group(tokens, pos + 1, line, kw);
      MiniCStatement s;
      s.line = line;
      s.code = std::move(code);
      if (kw == "if" || kw == "while") {
        if (close == pos + 2) throw ParseError(line, "condition inside '" + kw + " ( )'");
        s.kind = kw == "if" ? StmtKind::if_header : StmtKind::while_header;
        add_expression(tokens, pos + 2, close, options_, s.head);
      } else {
        s.kind = StmtKind::for_header;
        analyze_for(tokens, pos + 2, close, line, s);
      }
      s.defs = s.head.defs;
      s.uses = s.head.uses;
      if (s.for_init) {
        s.defs.insert(s.for_init->defs.begin(), s.for_init->defs.end());
        s.uses.insert(s.for_init->uses.begin(), s.for_init->uses.end());
      }
      program_.statements.push_back(std::move(s));
      const std::size_t idx = program_.statements.size() - 1;
      for (auto& p : prefix) {
        p.stmt = idx;
        items_.push_back(p);
      }
      const ItemKind k = kw == "if" ? ItemKind::if_header : kw == "while" ? ItemKind::while_header : ItemKind::for_header;
      items_.push_back({k, idx, line});
      finish_header(tokens, close + 1, line);
      return;
    }

    if (!prefix.empty() || (pos < n && tokens[pos].is("{"))) {
      // Pure delimiter line: "}", "{", "else", "} else", "else {", "} else {".
      const std::size_t idx = add_statement(line, StmtKind::block_delim, std::move(code));
      for (auto& p : prefix) {
        p.stmt = idx;
        items_.push_back(p);
      }
      if (pos < n && tokens[pos].is("{")) {
        items_.push_back({ItemKind::open, idx, line});
        ++pos;
      }
      if (pos != n) throw ParseError(line, "end of line after block delimiter");
      return;
    }

    if (kw == "else") throw ParseError(line, "'else' after '}' or at line start");
    if (kw == "switch" || kw == "goto" || kw == "do" || kw == "break" || kw == "continue" || kw == "case" ||
        kw == "default" || kw == "typedef")
      throw ParseError(line, "supported statement ('" + kw + "' is not part of MiniC)");
    if (!tokens.back().is(";")) throw ParseError(line, "';' at end of statement");
    if (!balanced(tokens, 0, n)) throw ParseError(line, "balanced brackets");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (tokens[i].is(";")) throw ParseError(line, "one statement per line");
    for (const auto& t : tokens)
      if (t.is("{") || t.is("}")) throw ParseError(line, "braces on their own line");

    auto simple = analyze_simple_statement(std::vector<Token>(tokens.begin(), tokens.end() - 1), line, options_);
    MiniCStatement s;
    s.line = line;
    s.kind = simple.kind;
    s.code = std::move(code);
    s.head = simple.access;
    s.defs = s.head.defs;
    s.uses = s.head.uses;
    program_.statements.push_back(std::move(s));
    items_.push_back({ItemKind::simple, program_.statements.size() - 1, line});
  }

  static bool is_function_header(const std::vector<Token>& tokens) {
    if (tokens.empty() || !is_type_word(tokens[0].text)) return false;
    bool has_paren = false;
    for (const auto& t : tokens) {
      if (t.is(";") || t.is("=")) return false;
      if (t.is("(")) has_paren = true;
    }
    return has_paren;
  }

  void analyze_for(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, int line, MiniCStatement& s) {
    const auto parts = split_top_level(tokens, begin, end, ";");
    if (parts.size() != 3) throw ParseError(line, "'for (init; condition; step)'");
    const auto [ib, ie] = parts[0];
    const auto [cb, ce] = parts[1];
    const auto [sb, se] = parts[2];
    if (ib < ie) {
      std::vector<Token> init(tokens.begin() + static_cast<std::ptrdiff_t>(ib),
                              tokens.begin() + static_cast<std::ptrdiff_t>(ie));
      s.for_init = analyze_simple_statement(init, line, options_).access;
    }
    add_expression(tokens, cb, ce, options_, s.head);
    if (sb < se) {
      for (auto [pb, pe] : split_top_level(tokens, sb, se, ",")) {
        if (pb == pe) throw ParseError(line, "step expression");
        analyze_expression_statement(tokens, pb, pe, line, options_, s.head);
      }
    }
  }

  const FrontendOptions& options_;
  Program program_;
  std::deque<Item> items_;
};

}  // namespace

std::set<std::string> expression_identifiers(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  std::set<std::string> out;
  for (std::size_t i = begin; i < end; ++i)
    if (is_variable_token(tokens, i, end)) out.insert(tokens[i].text);
  return out;
}

SimpleStatement analyze_simple_statement(const std::vector<Token>& tokens, int line, const FrontendOptions& options) {
  SimpleStatement out;
  if (tokens.empty()) throw ParseError(line, "statement before ';'");
  if (tokens[0].is("return")) {
    out.kind = StmtKind::return_stmt;
    add_expression(tokens, 1, tokens.size(), options, out.access);
    return out;
  }
  if (tokens[0].kind != TokenKind::punct && is_type_word(tokens[0].text)) {
    out.kind = StmtKind::decl;
    analyze_declaration(tokens, 0, tokens.size(), line, options, out.access);
    return out;
  }
  std::size_t begin = 0;
  for (auto [pb, pe] : split_top_level(tokens, begin, tokens.size(), ",")) {
    if (pb == pe) throw ParseError(line, "expression");
    const StmtKind k = analyze_expression_statement(tokens, pb, pe, line, options, out.access);
    if (out.kind != StmtKind::assign) out.kind = k;
  }
  return out;
}

Program parse_minic(std::string_view source, const FrontendOptions& options) {
  return Parser(source, options).run();
}

}  // namespace vulnpath
