#include "vulnpath/psp.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

SinkConfig SinkConfig::defaults() {
  SinkConfig c;
  for (const char* api : {"strcpy", "strncpy", "strcat", "strncat", "memcpy", "memmove", "sprintf", "snprintf", "gets",
                          "fgets", "system", "execl", "execv", "popen", "recv", "read", "alloca", "malloc", "realloc",
                          "free"})
    c.fc_apis.emplace(api, std::vector<int>{});
  return c;
}

SinkConfig SinkConfig::for_cwe(std::string_view cwe) const {
  auto it = cwe_overrides.find(std::string(cwe));
  if (it == cwe_overrides.end()) return *this;
  SinkConfig out = *this;
  for (const auto& [api, positions] : it->second.fc_apis) out.fc_apis[api] = positions;
  if (it->second.enabled) out.enabled = *it->second.enabled;
  return out;
}

namespace {

std::map<std::string, std::vector<int>> parse_api_table(const Json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path, "expected object of API name -> argument positions");
  std::map<std::string, std::vector<int>> out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string p = path + "." + it.key();
    if (it.key().empty()) throw SchemaError(p, "empty API name");
    if (!it.value().is_array()) throw SchemaError(p, "expected array of argument positions");
    std::vector<int> positions;
    for (std::size_t i = 0; i < it.value().size(); ++i) {
      const Json& x = it.value()[i];
      if (!x.is_number_integer() || x.get<std::int64_t>() < 0 || x.get<std::int64_t>() > 1000)
        throw SchemaError(fmt::format("{}[{}]", p, i), "argument position must be an integer >= 0");
      positions.push_back(x.get<int>());
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    out.emplace(it.key(), std::move(positions));
  }
  return out;
}

std::set<SinkKind> parse_kinds(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected array of sink kinds");
  std::set<SinkKind> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = fmt::format("{}[{}]", path, i);
    if (!v[i].is_string()) throw SchemaError(p, "expected string");
    auto k = parse_sink_kind(v[i].get<std::string>());
    if (!k) throw SchemaError(p, fmt::format("unknown sink kind \"{}\" (expected FC, AU, PU or AE)", v[i].get<std::string>()));
    out.insert(*k);
  }
  return out;
}

Json kinds_to_json(const std::set<SinkKind>& kinds) {
  Json out = Json::array();
  for (auto k : kinds) out.push_back(std::string(to_string(k)));
  return out;
}

}  // namespace

SinkConfig parse_sink_config(const Json& value) {
  if (!value.is_object()) throw SchemaError({}, "expected object");
  SinkConfig c;
  for (auto it = value.begin(); it != value.end(); ++it) {
    const auto& key = it.key();
    if (key == "fc_apis") c.fc_apis = parse_api_table(it.value(), key);
    else if (key == "enabled") c.enabled = parse_kinds(it.value(), key);
    else if (key == "guard_heuristic") {
      if (!it.value().is_boolean()) throw SchemaError(key, "expected boolean");
      c.guard_heuristic = it.value().get<bool>();
    } else if (key == "cwe_overrides") {
      if (!it.value().is_object()) throw SchemaError(key, "expected object keyed by CWE tag");
      for (auto o = it.value().begin(); o != it.value().end(); ++o) {
        const std::string p = key + "." + o.key();
        if (!o.value().is_object()) throw SchemaError(p, "expected object");
        SinkConfigOverride ov;
        for (auto f = o.value().begin(); f != o.value().end(); ++f) {
          if (f.key() == "fc_apis") ov.fc_apis = parse_api_table(f.value(), p + ".fc_apis");
          else if (f.key() == "enabled") ov.enabled = parse_kinds(f.value(), p + ".enabled");
          else throw SchemaError(p + "." + f.key(), "unknown field");
        }
        c.cwe_overrides.emplace(o.key(), std::move(ov));
      }
    } else {
      throw SchemaError(key, "unknown field");
    }
  }
  return c;
}

SinkConfig load_sink_config(const std::filesystem::path& path) {
  Json value;
  try {
    value = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError({}, path.string() + ": invalid JSON: " + e.what());
  }
  return parse_sink_config(value);
}

Json sink_config_to_json(const SinkConfig& config) {
  Json out = Json::object();
  Json apis = Json::object();
  for (const auto& [api, positions] : config.fc_apis) apis[api] = positions;
  out["fc_apis"] = std::move(apis);
  out["enabled"] = kinds_to_json(config.enabled);
  out["guard_heuristic"] = config.guard_heuristic;
  Json overrides = Json::object();
  for (const auto& [cwe, ov] : config.cwe_overrides) {
    Json o = Json::object();
    if (!ov.fc_apis.empty()) {
      Json t = Json::object();
      for (const auto& [api, positions] : ov.fc_apis) t[api] = positions;
      o["fc_apis"] = std::move(t);
    }
    if (ov.enabled) o["enabled"] = kinds_to_json(*ov.enabled);
    overrides[cwe] = std::move(o);
  }
  if (!overrides.empty()) out["cwe_overrides"] = std::move(overrides);
  return out;
}

namespace {

using Tokens = std::vector<Token>;
constexpr std::size_t npos = std::string::npos;

bool is_operand_token(const Token& t) {
  return (t.kind == TokenKind::identifier && !is_type_word(t.text)) || t.kind == TokenKind::number ||
         t.kind == TokenKind::string || t.kind == TokenKind::character;
}

bool is_member_op(const Token& t) { return t.kind == TokenKind::punct && (t.is(".") || t.is("->")); }

bool is_variable(const Tokens& t, std::size_t i) {
  if (t[i].kind != TokenKind::identifier || is_type_word(t[i].text)) return false;
  if (i + 1 < t.size() && t[i + 1].is("(")) return false;
  if (i > 0 && is_member_op(t[i - 1])) return false;
  return true;
}

std::set<std::string> variables(const Tokens& t, std::size_t begin, std::size_t end) {
  std::set<std::string> out;
  for (std::size_t i = begin; i < end && i < t.size(); ++i)
    if (is_variable(t, i)) out.insert(t[i].text);
  return out;
}

bool is_type_token(const Token& t) { return t.kind != TokenKind::punct && is_type_word(t.text); }

bool is_prefix_unary(const Tokens& t, std::size_t k) {
  static const std::set<std::string, std::less<>> ops = {"-", "+", "!", "~", "*", "&", "++", "--"};
  if (t[k].kind != TokenKind::punct || !ops.count(t[k].text)) return false;
  return k == 0 || !ends_operand(t[k - 1]);
}

bool is_arith_binary(const Token& t) {
  return t.kind == TokenKind::punct &&
         (t.is("+") || t.is("-") || t.is("*") || t.is("/") || t.is("%") || t.is("<<") || t.is(">>"));
}

bool is_relational(const Token& t) {
  return t.kind == TokenKind::punct &&
         (t.is("<") || t.is("<=") || t.is(">") || t.is(">=") || t.is("==") || t.is("!="));
}

/// Start of the postfix expression ending at `end`; prefix operators are
/// included when `with_prefix` is set.
std::size_t operand_start(const Tokens& t, std::size_t end, bool with_prefix) {
  if (end >= t.size()) return npos;
  std::size_t j = end;
  while (j > 0 && (t[j].is("++") || t[j].is("--"))) --j;
  for (;;) {
    if (t[j].is(")") || t[j].is("]")) {
      const std::size_t o = matching_open(t, j);
      if (o == npos) return npos;
      if (t[o].is("[")) {
        if (o == 0) return npos;
        j = o - 1;
        continue;
      }
      j = (o > 0 && t[o - 1].kind == TokenKind::identifier) ? o - 1 : o;
    } else if (!is_operand_token(t[j])) {
      return npos;
    }
    if (j >= 2 && is_member_op(t[j - 1])) {
      j -= 2;
      continue;
    }
    break;
  }
  if (with_prefix)
    while (j > 0 && is_prefix_unary(t, j - 1)) --j;
  return j;
}

/// End (inclusive) of the unary/postfix expression starting at `begin`.
std::size_t operand_end(const Tokens& t, std::size_t begin) {
  std::size_t j = begin;
  while (j < t.size() && is_prefix_unary(t, j)) ++j;
  if (j >= t.size()) return npos;
  if (t[j].is("(")) {
    j = matching_close(t, j);
    if (j == npos) return npos;
  } else if (!is_operand_token(t[j])) {
    return npos;
  }
  while (j + 1 < t.size()) {
    const Token& next = t[j + 1];
    if (next.is("(") && t[j].kind == TokenKind::identifier) {
      j = matching_close(t, j + 1);
    } else if (next.is("[")) {
      j = matching_close(t, j + 1);
    } else if (is_member_op(next) && j + 2 < t.size() && t[j + 2].kind == TokenKind::identifier) {
      j += 2;
    } else if (next.is("++") || next.is("--")) {
      ++j;
    } else {
      break;
    }
    if (j == npos) return npos;
  }
  return j;
}

std::vector<int> bracket_depth(const Tokens& t) {
  std::vector<int> depth(t.size(), 0);
  int d = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].kind == TokenKind::punct && (t[i].is(")") || t[i].is("]") || t[i].is("}"))) --d;
    depth[i] = d;
    if (t[i].kind == TokenKind::punct && (t[i].is("(") || t[i].is("[") || t[i].is("{"))) ++d;
  }
  return depth;
}

struct Statement {
  const Tokens& t;
  std::string_view code;
  std::vector<int> depth;
  bool declaration = false;

  Statement(const Tokens& tokens, std::string_view text) : t(tokens), code(text), depth(bracket_depth(tokens)) {
    declaration = !t.empty() && is_type_token(t[0]);
  }

  std::string text(std::size_t first, std::size_t last) const {
    const std::size_t b = t[first].offset;
    const std::size_t e = t[last].offset + t[last].text.size();
    return std::string(code.substr(b, e - b));
  }

  /// Token `i` (a name or `*`) belongs to a declarator of a declaration.
  bool in_declarator(std::size_t i) const {
    if (!declaration || depth[i] != 0) return false;
    std::size_t j = i;
    while (j > 0 && (t[j - 1].is("*") || t[j - 1].is("const"))) --j;
    if (j == 0) return false;
    const Token& prev = t[j - 1];
    if (is_type_token(prev)) return true;
    if (prev.is(",") && depth[j - 1] == 0) return true;
    // struct tag: `struct node *p`
    return prev.kind == TokenKind::identifier && j >= 2 &&
           (t[j - 2].is("struct") || t[j - 2].is("union") || t[j - 2].is("enum"));
  }
};

struct RawMatch {
  SinkKind kind;
  std::string detail;
  std::set<std::string> key_vars;
  std::optional<std::string> incdec_var;
};

std::vector<std::pair<std::size_t, std::size_t>> split_args(const Tokens& t, std::size_t open, std::size_t close) {
  std::vector<std::pair<std::size_t, std::size_t>> args;
  if (close == open + 1) return args;
  int depth = 0;
  std::size_t start = open + 1;
  for (std::size_t i = open + 1; i < close; ++i) {
    if (t[i].is("(") || t[i].is("[") || t[i].is("{")) ++depth;
    else if (t[i].is(")") || t[i].is("]") || t[i].is("}")) --depth;
    else if (depth == 0 && t[i].is(",")) {
      args.emplace_back(start, i);
      start = i + 1;
    }
  }
  args.emplace_back(start, close);
  return args;
}

std::set<std::string> call_key_vars(const Tokens& t, std::size_t name, std::size_t close, const SinkConfig& config) {
  const auto args = split_args(t, name + 1, close);
  auto it = config.fc_apis.find(t[name].text);
  if (it == config.fc_apis.end() || it->second.empty()) return variables(t, name + 2, close);
  std::set<std::string> out;
  for (int pos : it->second) {
    if (static_cast<std::size_t>(pos) >= args.size()) continue;
    auto vars = variables(t, args[pos].first, args[pos].second);
    out.insert(vars.begin(), vars.end());
  }
  return out;
}

void match_calls(const Statement& s, const SinkConfig& config, std::vector<RawMatch>& out) {
  const Tokens& t = s.t;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i].kind != TokenKind::identifier || !t[i + 1].is("(")) continue;
    if (i > 0 && is_member_op(t[i - 1])) continue;
    if (!config.fc_apis.count(t[i].text)) continue;
    const std::size_t close = matching_close(t, i + 1);
    if (close == npos) continue;
    out.push_back({SinkKind::FC, s.text(i, close), call_key_vars(t, i, close, config), std::nullopt});
  }
}

bool constant_tokens(const Tokens& t, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    const Token& x = t[i];
    if (x.kind == TokenKind::number || x.kind == TokenKind::character) continue;
    if (x.kind == TokenKind::punct && (is_arith_binary(x) || x.is("(") || x.is(")"))) continue;
    return false;
  }
  return true;
}

void match_arrays(const Statement& s, std::vector<RawMatch>& out) {
  const Tokens& t = s.t;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i].kind != TokenKind::identifier || is_type_word(t[i].text) || !t[i + 1].is("[")) continue;
    if (s.in_declarator(i)) continue;
    bool constant = true;
    bool malformed = false;
    std::size_t last = i;
    for (std::size_t open = i + 1; open < t.size() && t[open].is("[");) {
      const std::size_t close = matching_close(t, open);
      if (close == npos || close == open + 1) {
        malformed = true;
        break;
      }
      constant = constant && constant_tokens(t, open + 1, close);
      last = close;
      open = close + 1;
    }
    if (malformed || constant) continue;
    const std::size_t first = operand_start(t, i, false);
    const std::size_t from = first == npos ? i : first;
    out.push_back({SinkKind::AU, s.text(from, last), variables(t, from, last + 1), std::nullopt});
  }
}

void match_pointers(const Statement& s, std::vector<RawMatch>& out) {
  const Tokens& t = s.t;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i].is("*") && is_prefix_unary(t, i) && is_variable(t, i + 1) && !s.in_declarator(i)) {
      out.push_back({SinkKind::PU, s.text(i, i + 1), {t[i + 1].text}, std::nullopt});
    } else if (is_variable(t, i) && t[i + 1].is("->")) {
      const std::size_t last = i + 2 < t.size() && t[i + 2].kind == TokenKind::identifier ? i + 2 : i + 1;
      out.push_back({SinkKind::PU, s.text(i, last), {t[i].text}, std::nullopt});
    }
  }
}

/// Conditions (if/while/for) inside the statement that compare `var`.
bool statement_guards(const Tokens& t, const std::string& var) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i].kind != TokenKind::keyword || !(t[i].is("if") || t[i].is("while") || t[i].is("for"))) continue;
    if (!t[i + 1].is("(")) continue;
    const std::size_t close = matching_close(t, i + 1);
    if (close == npos) continue;
    std::size_t begin = i + 2, end = close;
    if (t[i].is("for")) {
      std::vector<std::pair<std::size_t, std::size_t>> clauses;
      int depth = 0;
      std::size_t start = i + 2;
      for (std::size_t k = i + 2; k < close; ++k) {
        if (t[k].is("(") || t[k].is("[")) ++depth;
        else if (t[k].is(")") || t[k].is("]")) --depth;
        else if (depth == 0 && t[k].is(";")) {
          clauses.emplace_back(start, k);
          start = k + 1;
        }
      }
      clauses.emplace_back(start, close);
      if (clauses.size() != 3) continue;
      begin = clauses[1].first;
      end = clauses[1].second;
    }
    bool relational = false, mentions = false;
    for (std::size_t k = begin; k < end; ++k) {
      relational = relational || is_relational(t[k]);
      mentions = mentions || (t[k].kind == TokenKind::identifier && t[k].text == var);
    }
    if (relational && mentions) return true;
  }
  return false;
}

void match_arithmetic(const Statement& s, const SinkConfig& config, std::vector<RawMatch>& out) {
  const Tokens& t = s.t;
  std::set<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const Token& op = t[i];
    if (op.kind != TokenKind::punct) continue;
    if (op.is("+") || op.is("-") || op.is("*") || op.is("<<")) {
      if (!ends_operand(t[i - 1])) continue;
      std::size_t l = operand_start(t, i - 1, true);
      std::size_t r = operand_end(t, i + 1);
      if (l == npos || r == npos) continue;
      while (l >= 2 && is_arith_binary(t[l - 1]) && ends_operand(t[l - 2])) {
        const std::size_t next = operand_start(t, l - 2, true);
        if (next == npos) break;
        l = next;
      }
      while (r + 2 < t.size() && is_arith_binary(t[r + 1])) {
        const std::size_t next = operand_end(t, r + 2);
        if (next == npos) break;
        r = next;
      }
      spans.emplace(l, r);
    } else if (op.is("+=") || op.is("-=") || op.is("*=") || op.is("<<=")) {
      const std::size_t l = operand_start(t, i - 1, true);
      if (l == npos) continue;
      std::size_t r = i + 1;
      while (r + 1 < t.size() && s.depth[r + 1] >= s.depth[i] &&
             !(s.depth[r + 1] == s.depth[i] && (t[r + 1].is(",") || t[r + 1].is(";") || t[r + 1].is(")"))))
        ++r;
      spans.emplace(l, r);
    }
  }
  for (auto [l, r] : spans) {
    auto vars = variables(t, l, r + 1);
    if (vars.empty()) continue;
    out.push_back({SinkKind::AE, s.text(l, r), std::move(vars), std::nullopt});
  }

  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i].is("++") || t[i].is("--"))) continue;
    std::size_t l, r;
    if (i > 0 && ends_operand(t[i - 1]) && !t[i - 1].is("++") && !t[i - 1].is("--")) {
      l = operand_start(t, i - 1, false);
      r = i;
    } else {
      l = i;
      r = i + 1 < t.size() ? operand_end(t, i + 1) : npos;
    }
    if (l == npos || r == npos) continue;
    auto vars = variables(t, l, r + 1);
    if (vars.empty()) continue;
    std::optional<std::string> root;
    for (std::size_t k = l; k <= r; ++k)
      if (is_variable(t, k)) {
        root = t[k].text;
        break;
      }
    if (config.guard_heuristic && root && statement_guards(t, *root)) continue;
    out.push_back({SinkKind::AE, s.text(l, r), std::move(vars), root});
  }
}

std::vector<RawMatch> raw_matches(std::string_view code, const SinkConfig& config, LexMode mode) {
  const Tokens tokens = lex(code, mode);
  const Statement s(tokens, code);
  std::vector<RawMatch> out;
  if (config.enabled.count(SinkKind::FC)) match_calls(s, config, out);
  if (config.enabled.count(SinkKind::AU)) match_arrays(s, out);
  if (config.enabled.count(SinkKind::PU)) match_pointers(s, out);
  if (config.enabled.count(SinkKind::AE)) match_arithmetic(s, config, out);
  return out;
}

std::vector<SinkMatch> merge(const std::vector<RawMatch>& raw) {
  std::vector<SinkMatch> out;
  for (SinkKind kind : {SinkKind::FC, SinkKind::AU, SinkKind::PU, SinkKind::AE}) {
    SinkMatch m{kind, {}, {}};
    std::vector<std::string> seen;
    for (const auto& r : raw) {
      if (r.kind != kind) continue;
      if (std::find(seen.begin(), seen.end(), r.detail) == seen.end()) {
        if (!m.detail.empty()) m.detail += "; ";
        m.detail += r.detail;
        seen.push_back(r.detail);
      }
      m.key_vars.insert(r.key_vars.begin(), r.key_vars.end());
    }
    if (!seen.empty()) out.push_back(std::move(m));
  }
  return out;
}

/// Control predecessor headers of `node` that compare `var`.
bool guarded_by_predecessor(const GraphIndex& index, NodeId node, const std::string& var) {
  for (const auto& e : index.in_edges(node)) {
    if (e.kind != EdgeKind::control) continue;
    if (statement_guards(lex(index.node(e.src).code, LexMode::lenient), var)) return true;
  }
  return false;
}

}  // namespace

std::vector<SinkMatch> classify_statement(std::string_view code, const SinkConfig& config, LexMode mode) {
  return merge(raw_matches(code, config, mode));
}

std::set<std::string> key_variables(SinkKind kind, std::string_view matched_expression, const SinkConfig& config) {
  const Tokens t = lex(matched_expression, LexMode::lenient);
  if (kind == SinkKind::FC) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (t[i].kind != TokenKind::identifier || !t[i + 1].is("(")) continue;
      const std::size_t close = matching_close(t, i + 1);
      if (close == npos) break;
      return call_key_vars(t, i, close, config);
    }
    return {};
  }
  if (kind == SinkKind::PU) {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (is_variable(t, i)) return {t[i].text};
    return {};
  }
  return variables(t, 0, t.size());
}

std::vector<SinkPoint> extract_sink_nodes(const ProgramDependenceGraph& pdg, const SinkConfig& config) {
  const auto g = canonicalize(pdg);
  const GraphIndex index(g);
  std::vector<SinkPoint> out;
  for (const auto& node : g.nodes) {
    auto raw = raw_matches(node.code, config, LexMode::lenient);
    if (config.guard_heuristic) {
      raw.erase(std::remove_if(raw.begin(), raw.end(),
                               [&](const RawMatch& m) {
                                 return m.incdec_var && guarded_by_predecessor(index, node.id, *m.incdec_var);
                               }),
                raw.end());
    }
    for (auto& m : merge(raw)) out.push_back({node.id, m.kind, std::move(m.key_vars), std::move(m.detail)});
  }
  return out;
}

}  // namespace vulnpath
