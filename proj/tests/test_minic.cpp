#include <gtest/gtest.h>

#include "vulnpath/error.hpp"
#include "vulnpath/lexer.hpp"
#include "vulnpath/minic.hpp"
#include "vulnpath/pdg_builder.hpp"

using namespace vulnpath;

namespace {

using Names = std::set<std::string>;

MiniCStatement only(const std::string& body) {
  const auto p = parse_minic("void f() {\n" + body + "\n}\n");
  for (const auto& s : p.statements)
    if (s.line == 2) return s;
  ADD_FAILURE() << "no statement on line 2";
  return {};
}

}  // namespace

TEST(Lexer, TokenKinds) {
  const auto t = lex("x->y[3] = 'a' + \"s\" ; a <<= 2");
  ASSERT_GE(t.size(), 10u);
  EXPECT_EQ(t[0].kind, TokenKind::identifier);
  EXPECT_TRUE(t[1].is("->"));
  EXPECT_EQ(t[4].kind, TokenKind::number);
  EXPECT_EQ(t[7].kind, TokenKind::character);
  EXPECT_EQ(t[9].kind, TokenKind::string);
  EXPECT_TRUE(t.back().is("2"));
  EXPECT_TRUE(t[t.size() - 2].is("<<="));
}

TEST(Lexer, StrictRejectsWhatLenientTolerates) {
  EXPECT_THROW(lex("a = `b`;"), LexError);
  EXPECT_THROW(lex("s = \"open"), LexError);
  EXPECT_NO_THROW(lex("a = `b`;", LexMode::lenient));
  try {
    lex("ab @");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(Lexer, MatchingBrackets) {
  const auto t = lex("f(a[(b)], c)");
  EXPECT_EQ(matching_close(t, 1), t.size() - 1);
  EXPECT_EQ(matching_open(t, t.size() - 1), 1u);
}

TEST(MiniC, DeclarationDefinesAndUses) {
  const auto s = only("int a = b + 1;");
  EXPECT_EQ(s.kind, StmtKind::decl);
  EXPECT_EQ(s.defs, Names{"a"});
  EXPECT_EQ(s.uses, Names{"b"});
}

TEST(MiniC, OutParameterCallDefinesFirstArgument) {
  const auto s = only("strncpy(dst, src, n);");
  EXPECT_EQ(s.kind, StmtKind::call);
  EXPECT_EQ(s.defs, Names{"dst"});
  EXPECT_EQ(s.uses, (Names{"dst", "src", "n"}));
  EXPECT_TRUE(s.head.kills.empty());
}

TEST(MiniC, WhileHeaderUsesOnly) {
  const auto p = parse_minic("void f() {\nwhile (i < len) {\ni++;\n}\n}\n");
  EXPECT_EQ(p.statements[1].kind, StmtKind::while_header);
  EXPECT_EQ(p.statements[1].uses, (Names{"i", "len"}));
  EXPECT_TRUE(p.statements[1].defs.empty());
}

TEST(MiniC, SelfUpdateIsDefAndUse) {
  const auto s = only("x = x + 1;");
  EXPECT_EQ(s.defs, Names{"x"});
  EXPECT_EQ(s.uses, Names{"x"});
  EXPECT_EQ(s.head.kills, Names{"x"});
}

TEST(MiniC, ElementWriteIsWeakDefinition) {
  const auto s = only("data[i] = c;");
  EXPECT_EQ(s.defs, Names{"data"});
  EXPECT_EQ(s.uses, (Names{"data", "i", "c"}));
  EXPECT_TRUE(s.head.kills.empty());
}

TEST(MiniC, CompoundAndIncrement) {
  EXPECT_EQ(only("n += m;").uses, (Names{"n", "m"}));
  EXPECT_EQ(only("n++;").defs, Names{"n"});
  EXPECT_EQ(only("--n;").uses, Names{"n"});
}

TEST(MiniC, ForHeaderSplitsInitFromHead) {
  const auto p = parse_minic("void f() {\nfor (i = 0; i < n; i++) {\nx = i;\n}\n}\n");
  const auto& h = p.statements[1];
  EXPECT_EQ(h.kind, StmtKind::for_header);
  ASSERT_TRUE(h.for_init.has_value());
  EXPECT_EQ(h.for_init->defs, Names{"i"});
  EXPECT_EQ(h.head.uses, (Names{"i", "n"}));
  EXPECT_EQ(h.head.defs, Names{"i"});
}

TEST(MiniC, BlockStructure) {
  const auto p = parse_minic(
      "void f() {\n"
      "  if (a < b) {\n"
      "    x = 1;\n"
      "  } else if (a > b) {\n"
      "    x = 2;\n"
      "  } else {\n"
      "    x = 3;\n"
      "  }\n"
      "  return;\n"
      "}\n");
  EXPECT_EQ(p.function_name, "f");
  ASSERT_EQ(p.body.size(), 2u);
  EXPECT_TRUE(p.body[0].has_else);
  ASSERT_EQ(p.body[0].else_body.size(), 1u);
  EXPECT_TRUE(p.body[0].else_body[0].has_else);
  EXPECT_EQ(p.statements[p.body[1].stmt].kind, StmtKind::return_stmt);
}

TEST(MiniC, CommentsAreIgnoredAndLinesKept) {
  const auto p = parse_minic("void f() {\n/* a\n b */ x = 1; // trailing\ny = x;\n}\n");
  bool seen = false;
  for (const auto& s : p.statements)
    if (s.line == 3) {
      EXPECT_EQ(s.defs, Names{"x"});
      seen = true;
    }
  EXPECT_TRUE(seen);
}

TEST(MiniC, SyntaxErrorsCarryLine) {
  auto line_of = [](const std::string& src) {
    try {
      parse_minic(src);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("void f() {\nx = ;\n}\n"), 2);
  EXPECT_EQ(line_of("void f() {\nif (a) {\nx = 1;\n"), 3);
  EXPECT_EQ(line_of("void f() {\ngoto out;\n}\n"), 2);
  EXPECT_EQ(line_of("void f() {\nx = 1\n}\n"), 2);
}

TEST(MiniC, UnreachableStatementIsRejectedWithLine) {
  try {
    build_pdg("void f() {\nreturn;\nx = 1;\n}\n", "f");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}
