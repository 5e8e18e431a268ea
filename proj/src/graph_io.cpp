#include "vulnpath/graph_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

const Json& require(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(path, key), "missing required field");
  return *it;
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<std::string_view> known,
                std::vector<std::string>* warnings) {
  if (warnings == nullptr) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) warnings->push_back(fmt::format("{}: unknown field ignored", join(path, it.key())));
  }
}

std::int64_t get_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    throw SchemaError(path, "integer out of range");
  return v.get<std::int64_t>();
}

const std::string& get_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected string");
  return v.get_ref<const std::string&>();
}

void require_object(const Json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path, "expected object");
}

void require_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected array");
}

}  // namespace

ProgramDependenceGraph pdg_from_json(const Json& value, const std::string& path, std::vector<std::string>* warnings) {
  require_object(value, path);
  check_keys(value, path, {"id", "nodes", "edges"}, warnings);
  ProgramDependenceGraph pdg;
  pdg.id = get_string(require(value, path, "id"), join(path, "id"));

  const std::string nodes_path = join(path, "nodes");
  const Json& nodes = require(value, path, "nodes");
  require_array(nodes, nodes_path);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = index(nodes_path, i);
    const Json& n = nodes[i];
    require_object(n, p);
    check_keys(n, p, {"id", "line", "code"}, warnings);
    StatementNode node;
    node.id = NodeId(get_int(require(n, p, "id"), join(p, "id")));
    const auto line = get_int(require(n, p, "line"), join(p, "line"));
    if (line < 1 || line > INT32_MAX) throw SchemaError(join(p, "line"), "line must be in [1, 2^31)");
    node.line = static_cast<int>(line);
    node.code = get_string(require(n, p, "code"), join(p, "code"));
    pdg.nodes.push_back(std::move(node));
  }

  const std::string edges_path = join(path, "edges");
  const Json& edges = require(value, path, "edges");
  require_array(edges, edges_path);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = index(edges_path, i);
    const Json& e = edges[i];
    require_object(e, p);
    check_keys(e, p, {"src", "dst", "kind", "var"}, warnings);
    DependenceEdge edge;
    edge.src = NodeId(get_int(require(e, p, "src"), join(p, "src")));
    edge.dst = NodeId(get_int(require(e, p, "dst"), join(p, "dst")));
    const auto& kind = get_string(require(e, p, "kind"), join(p, "kind"));
    auto parsed = parse_edge_kind(kind);
    if (!parsed) throw SchemaError(join(p, "kind"), fmt::format("unknown edge kind \"{}\" (expected control or data)", kind));
    edge.kind = *parsed;
    if (auto it = e.find("var"); it != e.end()) edge.var = get_string(*it, join(p, "var"));
    pdg.edges.push_back(std::move(edge));
  }

  auto problems = validate(pdg);
  if (!problems.empty()) {
    std::string msg = problems.front();
    if (problems.size() > 1) msg += fmt::format(" (and {} more)", problems.size() - 1);
    throw ValidationError(path.empty() ? msg : path + ": " + msg);
  }
  return canonicalize(std::move(pdg));
}

Json pdg_to_json(const ProgramDependenceGraph& pdg) {
  const auto g = canonicalize(pdg);
  Json out = Json::object();
  out["id"] = g.id;
  Json nodes = Json::array();
  for (const auto& n : g.nodes) {
    Json j = Json::object();
    j["id"] = n.id.value;
    j["line"] = n.line;
    j["code"] = n.code;
    nodes.push_back(std::move(j));
  }
  out["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    Json j = Json::object();
    j["src"] = e.src.value;
    j["dst"] = e.dst.value;
    j["kind"] = std::string(to_string(e.kind));
    if (e.kind == EdgeKind::data) j["var"] = e.var;
    edges.push_back(std::move(j));
  }
  out["edges"] = std::move(edges);
  return out;
}

ProgramDependenceGraph read_pdg_json(std::string_view bytes, std::vector<std::string>* warnings) {
  Json value;
  try {
    value = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw SchemaError({}, std::string("invalid JSON: ") + e.what());
  }
  return pdg_from_json(value, {}, warnings);
}

std::string write_pdg_json(const ProgramDependenceGraph& pdg, int indent) { return pdg_to_json(pdg).dump(indent); }

Json sample_to_json(const LabeledSample& sample) {
  Json out = Json::object();
  out["pdg"] = pdg_to_json(sample.pdg);
  out["label"] = static_cast<int>(sample.label);
  out["vuln_lines"] = Json(std::vector<int>(sample.vuln_lines.begin(), sample.vuln_lines.end()));
  out["cwe"] = sample.cwe;
  return out;
}

std::string write_dataset(const std::vector<LabeledSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<LabeledSample>& samples) {
  write_text_file(path, write_dataset(samples));
}

namespace {

LabeledSample sample_from_json(const Json& value, std::vector<std::string>& warnings) {
  require_object(value, {});
  check_keys(value, {}, {"pdg", "label", "vuln_lines", "cwe"}, &warnings);
  LabeledSample s;
  s.pdg = pdg_from_json(require(value, {}, "pdg"), "pdg", &warnings);
  const auto label = get_int(require(value, {}, "label"), "label");
  if (label != 0 && label != 1) throw SchemaError("label", "expected 0 or 1");
  s.label = label == 1 ? Label::vulnerable : Label::safe;
  const Json& lines = require(value, {}, "vuln_lines");
  require_array(lines, "vuln_lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = get_int(lines[i], index("vuln_lines", i));
    if (line < 1 || line > INT32_MAX) throw SchemaError(index("vuln_lines", i), "line must be in [1, 2^31)");
    s.vuln_lines.insert(static_cast<int>(line));
  }
  s.cwe = get_string(require(value, {}, "cwe"), "cwe");
  return s;
}

}  // namespace

Dataset parse_dataset(std::string_view text) {
  Dataset out;
  std::map<std::string, std::size_t> by_bytes;   // canonical pdg -> sample index
  std::map<std::string, std::string> id_bytes;   // id -> canonical pdg
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    LabeledSample sample;
    std::vector<std::string> warnings;
    try {
      sample = sample_from_json(Json::parse(line), warnings);
    } catch (const Json::parse_error& e) {
      throw DatasetError(line_no, std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
      throw DatasetError(line_no, e.what());
    }
    for (auto& w : warnings) out.warnings.push_back(fmt::format("line {}: {}", line_no, w));
    if (auto problems = validate(sample); !problems.empty()) throw DatasetError(line_no, problems.front());

    std::string bytes = write_pdg_json(sample.pdg);
    if (auto it = by_bytes.find(bytes); it != by_bytes.end()) {
      const auto& first = out.samples[it->second];
      if (first.label != sample.label || first.vuln_lines != sample.vuln_lines || first.cwe != sample.cwe)
        out.warnings.push_back(
            fmt::format("line {}: graph \"{}\" repeats an earlier record with different labels; kept the first",
                        line_no, sample.pdg.id));
      ++out.duplicates;
      continue;
    }
    if (auto it = id_bytes.find(sample.pdg.id); it != id_bytes.end())
      throw DatasetError(line_no, fmt::format("duplicate sample id \"{}\" with a different graph", sample.pdg.id));
    id_bytes.emplace(sample.pdg.id, bytes);
    by_bytes.emplace(std::move(bytes), out.samples.size());
    out.samples.push_back(std::move(sample));
  }
  return out;
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_text_file(path)); }

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const ProgramDependenceGraph& pdg, const std::optional<FlowPath>& highlight) {
  const auto g = canonicalize(pdg);
  std::set<NodeId> hot_nodes;
  std::set<std::pair<NodeId, NodeId>> hot_edges;
  if (highlight) {
    for (NodeId id : highlight->nodes) {
      if (!g.contains(id)) throw GraphError("highlighted node not found: " + to_string(id));
      hot_nodes.insert(id);
    }
    for (std::size_t i = 0; i + 1 < highlight->nodes.size(); ++i)
      hot_edges.emplace(highlight->nodes[i + 1], highlight->nodes[i]);
  }

  std::ostringstream os;
  os << "digraph \"" << dot_escape(g.id) << "\" {\n";
  os << "  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& n : g.nodes) {
    os << "  n" << n.id.value << " [label=\"" << n.line << ": " << dot_escape(n.code) << "\"";
    if (hot_nodes.count(n.id)) os << ", color=red, fontcolor=red, penwidth=2";
    os << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  n" << e.src.value << " -> n" << e.dst.value << " [";
    if (e.kind == EdgeKind::data) os << "style=dashed, label=\"" << dot_escape(e.var) << "\"";
    else os << "style=solid";
    if (hot_edges.count({e.src, e.dst})) os << ", color=red, penwidth=2";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace vulnpath
