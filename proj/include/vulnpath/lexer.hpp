#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vulnpath {

enum class TokenKind { identifier, keyword, number, string, character, punct };

struct Token {
  TokenKind kind = TokenKind::punct;
  std::string text;
  std::size_t offset = 0;  ///< byte offset of the first character

  bool is(std::string_view s) const { return text == s; }
  bool is_ident() const { return kind == TokenKind::identifier; }
  bool operator==(const Token&) const = default;
};

enum class LexMode {
  strict,   ///< unknown characters and unterminated literals raise LexError
  lenient,  ///< unknown characters become one-character punct tokens
};

/// Tokenizes C-like statement text. Comments are skipped. `#` and `\` are
/// rejected in strict mode since there is no preprocessor.
std::vector<Token> lex(std::string_view code, LexMode mode = LexMode::strict);

bool is_keyword(std::string_view word);

/// Builtin and common typedef'd type names (`int`, `size_t`, `FILE`, any
/// `*_t`), plus declaration qualifiers such as `const` and `static`.
bool is_type_word(std::string_view word);

/// True when the token can end an operand: identifier, literal, `)`, `]`,
/// postfix `++`/`--`. Used to tell binary `*`/`-`/`+` from unary ones.
bool ends_operand(const Token& token);

/// Index of the bracket matching the opener at `open`, or npos when unbalanced.
std::size_t matching_close(const std::vector<Token>& tokens, std::size_t open);
std::size_t matching_open(const std::vector<Token>& tokens, std::size_t close);

}  // namespace vulnpath
