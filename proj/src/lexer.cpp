#include "vulnpath/lexer.hpp"

#include <array>
#include <cctype>
#include <string>
#include <unordered_set>

#include "vulnpath/error.hpp"

namespace vulnpath {

namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> set = {
      "auto",   "break",    "case",     "char",   "const",    "continue", "default", "do",
      "double", "else",     "enum",     "extern", "float",    "for",      "goto",    "if",
      "inline", "int",      "long",     "register", "restrict", "return", "short",   "signed",
      "sizeof", "static",   "struct",   "switch", "typedef",  "union",    "unsigned", "void",
      "volatile", "while",  "_Bool",    "bool"};
  return set;
}

const std::unordered_set<std::string_view>& type_words() {
  static const std::unordered_set<std::string_view> set = {
      "char",   "short",  "int",    "long",    "float",  "double",  "signed", "unsigned", "void",
      "const",  "volatile", "static", "register", "extern", "struct", "union", "enum",    "_Bool",
      "bool",   "FILE",   "SOCKET", "BOOL",    "DWORD",  "BYTE",    "WORD"};
  return set;
}

// Longest first so that maximal munch picks "<<=" before "<<" before "<".
constexpr std::array<std::string_view, 22> kMultiCharOps = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==",
    "!=",  "&&",  "||",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="};

constexpr std::string_view kSingleCharOps = "+-*/%<>=!&|^~?:;,.()[]{}";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) { return keywords().count(word) != 0; }

bool is_type_word(std::string_view word) {
  if (type_words().count(word)) return true;
  return word.size() > 2 && word.substr(word.size() - 2) == "_t";
}

bool ends_operand(const Token& t) {
  switch (t.kind) {
    case TokenKind::identifier:
      return !is_type_word(t.text);
    case TokenKind::number:
    case TokenKind::string:
    case TokenKind::character:
      return true;
    case TokenKind::keyword:
      return false;
    case TokenKind::punct:
      return t.text == ")" || t.text == "]" || t.text == "++" || t.text == "--";
  }
  return false;
}

std::vector<Token> lex(std::string_view code, LexMode mode) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = code.size();
  auto fail = [&](std::size_t at, const std::string& what) {
    if (mode == LexMode::strict) throw LexError(at, what);
  };
  while (i < n) {
    const char c = code[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '/') break;
    if (c == '/' && i + 1 < n && code[i + 1] == '*') {
      auto end = code.find("*/", i + 2);
      if (end == std::string_view::npos) {
        fail(i, "unterminated comment");
        break;
      }
      i = end + 2;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < n && ident_char(code[i])) ++i;
      std::string word(code.substr(start, i - start));
      const auto kind = is_keyword(word) ? TokenKind::keyword : TokenKind::identifier;
      out.push_back({kind, std::move(word), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(code[i + 1])))) {
      while (i < n && (ident_char(code[i]) || code[i] == '.' ||
                       ((code[i] == '+' || code[i] == '-') && (code[i - 1] == 'e' || code[i - 1] == 'E') &&
                        !(code[start] == '0' && start + 1 < n && (code[start + 1] == 'x' || code[start + 1] == 'X')))))
        ++i;
      out.push_back({TokenKind::number, std::string(code.substr(start, i - start)), start});
      continue;
    }
    if (c == '"' || c == '\'') {
      const char quote = c;
      // Optional encoding prefix (L"...") was lexed as an identifier; fine.
      ++i;
      bool closed = false;
      while (i < n) {
        if (code[i] == '\\' && i + 1 < n) {
          i += 2;
          continue;
        }
        if (code[i] == quote) {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) fail(start, quote == '"' ? "unterminated string literal" : "unterminated character literal");
      out.push_back({quote == '"' ? TokenKind::string : TokenKind::character, std::string(code.substr(start, i - start)),
                     start});
      continue;
    }
    bool matched = false;
    for (auto op : kMultiCharOps) {
      if (code.substr(i, op.size()) == op) {
        out.push_back({TokenKind::punct, std::string(op), start});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kSingleCharOps.find(c) != std::string_view::npos) {
      out.push_back({TokenKind::punct, std::string(1, c), start});
      ++i;
      continue;
    }
    fail(i, std::string("unexpected character '") + c + "'");
    out.push_back({TokenKind::punct, std::string(1, c), start});
    ++i;
  }
  return out;
}

namespace {

char closer_for(const std::string& open) {
  if (open == "(") return ')';
  if (open == "[") return ']';
  if (open == "{") return '}';
  return 0;
}

}  // namespace

std::size_t matching_close(const std::vector<Token>& tokens, std::size_t open) {
  const std::string& opener = tokens[open].text;
  const char closer = closer_for(opener);
  if (closer == 0) return std::string::npos;
  int depth = 0;
  for (std::size_t i = open; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::punct) continue;
    if (tokens[i].text == opener) ++depth;
    else if (tokens[i].text.size() == 1 && tokens[i].text[0] == closer && --depth == 0) return i;
  }
  return std::string::npos;
}

std::size_t matching_open(const std::vector<Token>& tokens, std::size_t close) {
  const std::string& closer = tokens[close].text;
  std::string opener = closer == ")" ? "(" : closer == "]" ? "[" : closer == "}" ? "{" : "";
  if (opener.empty()) return std::string::npos;
  int depth = 0;
  for (std::size_t i = close + 1; i-- > 0;) {
    if (tokens[i].kind != TokenKind::punct) continue;
    if (tokens[i].text == closer) ++depth;
    else if (tokens[i].text == opener && --depth == 0) return i;
  }
  return std::string::npos;
}

}  // namespace vulnpath
