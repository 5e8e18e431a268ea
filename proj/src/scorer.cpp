#include "vulnpath/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "vulnpath/error.hpp"
#include "vulnpath/lexer.hpp"

namespace vulnpath {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> hashed_counts(const ProgramDependenceGraph& graph, std::size_t dim) {
  if (dim == 0) throw ValidationError("feature dimension must be positive");
  std::vector<double> v(dim, 0.0);
  for (const auto& n : graph.nodes)
    for (const auto& t : lex(n.code, LexMode::lenient)) v[fnv1a64(t.text) % dim] += 1.0;
  return v;
}

std::vector<double> vectorize(const ProgramDependenceGraph& graph, std::size_t dim) {
  auto v = hashed_counts(graph, dim);
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (norm > 0)
    for (auto& x : v) x /= norm;
  return v;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double predict(const BaselineModel& model, const std::vector<double>& x) {
  if (x.size() != model.w.size()) throw ValidationError("feature vector and model dimension differ");
  return sigmoid(std::inner_product(x.begin(), x.end(), model.w.begin(), 0.0) + model.b);
}

Json model_to_json(const BaselineModel& model) {
  Json out = Json::object();
  out["D"] = model.dim;
  out["w"] = model.w;
  out["b"] = model.b;
  return out;
}

BaselineModel model_from_json(const Json& value) {
  if (!value.is_object()) throw SchemaError({}, "expected object");
  for (auto it = value.begin(); it != value.end(); ++it)
    if (it.key() != "D" && it.key() != "w" && it.key() != "b") throw SchemaError(it.key(), "unknown field");
  for (const char* key : {"D", "w", "b"})
    if (!value.contains(key)) throw SchemaError(key, "missing required field");
  const Json& d = value["D"];
  if (!d.is_number_integer() || d.get<std::int64_t>() < 1) throw SchemaError("D", "expected positive integer");
  BaselineModel m;
  m.dim = d.get<std::size_t>();
  const Json& w = value["w"];
  if (!w.is_array() || w.size() != m.dim) throw SchemaError("w", fmt::format("expected array of {} numbers", m.dim));
  m.w.assign(m.dim, 0.0);
  for (std::size_t i = 0; i < m.dim; ++i) {
    if (!w[i].is_number() || !std::isfinite(w[i].get<double>()))
      throw SchemaError(fmt::format("w[{}]", i), "expected finite number");
    m.w[i] = w[i].get<double>();
  }
  if (!value["b"].is_number() || !std::isfinite(value["b"].get<double>()))
    throw SchemaError("b", "expected finite number");
  m.b = value["b"].get<double>();
  return m;
}

void save_model(const std::filesystem::path& path, const BaselineModel& model) {
  write_text_file(path, model_to_json(model).dump() + "\n");
}

BaselineModel load_model(const std::filesystem::path& path) {
  Json value;
  try {
    value = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError({}, path.string() + ": invalid JSON: " + e.what());
  }
  return model_from_json(value);
}

LossGradient loss_and_gradient(const BaselineModel& model, const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty()) throw ValidationError("need equally many feature vectors and labels");
  LossGradient g;
  g.grad_w.assign(model.w.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& x = xs[i];
    const double z = std::inner_product(x.begin(), x.end(), model.w.begin(), 0.0) + model.b;
    // log(1 + e^z) - y z, evaluated without overflow.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    g.loss += (softplus - ys[i] * z) * inv_n;
    const double r = (sigmoid(z) - ys[i]) * inv_n;
    for (std::size_t j = 0; j < x.size(); ++j) g.grad_w[j] += r * x[j];
    g.grad_b += r;
  }
  return g;
}

TrainResult train_baseline(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                           const TrainParams& params) {
  if (xs.empty()) throw ValidationError("degenerate training set: no samples");
  const bool has_pos = std::any_of(ys.begin(), ys.end(), [](double y) { return y > 0.5; });
  const bool has_neg = std::any_of(ys.begin(), ys.end(), [](double y) { return y <= 0.5; });
  if (!has_pos || !has_neg) throw ValidationError("degenerate training set: only one label present");
  if (params.epochs < 0 || !(params.lr > 0)) throw ValidationError("epochs must be >= 0 and lr > 0");

  TrainResult result;
  result.model.dim = xs.front().size();
  result.model.w.assign(result.model.dim, 0.0);
  result.model.b = 0.0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto g = loss_and_gradient(result.model, xs, ys);
    result.loss_history.push_back(g.loss);
    for (std::size_t j = 0; j < g.grad_w.size(); ++j) result.model.w[j] -= params.lr * g.grad_w[j];
    result.model.b -= params.lr * g.grad_b;
  }
  result.loss_history.push_back(loss_and_gradient(result.model, xs, ys).loss);
  return result;
}

TrainResult train_baseline(const std::vector<LabeledSample>& dataset, const TrainParams& params) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(dataset.size());
  for (const auto& s : dataset) {
    xs.push_back(vectorize(s.pdg, params.dim));
    ys.push_back(s.label == Label::vulnerable ? 1.0 : 0.0);
  }
  return train_baseline(xs, ys, params);
}

double ContainsNodesOracle::score(const ProgramDependenceGraph& graph) {
  for (NodeId id : required_)
    if (!graph.contains(id)) return lo_;
  return hi_;
}

LabelOracle LabelOracle::from_dataset(const std::vector<LabeledSample>& dataset, double hi, double lo) {
  std::map<std::string, std::set<int>> lines;
  for (const auto& s : dataset)
    if (s.label == Label::vulnerable) lines[s.pdg.id] = s.vuln_lines;
  return LabelOracle(std::move(lines), hi, lo);
}

double LabelOracle::score(const ProgramDependenceGraph& graph) {
  auto it = lines_.find(graph.id);
  if (it == lines_.end() || it->second.empty()) return lo_;
  std::set<int> present;
  for (const auto& n : graph.nodes) present.insert(n.line);
  std::size_t covered = 0;
  for (int line : it->second) covered += present.count(line);
  return lo_ + (hi_ - lo_) * static_cast<double>(covered) / static_cast<double>(it->second.size());
}

double importance(double p_G, double p_g) {
  auto in_range = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_range(p_G) || !in_range(p_g))
    throw ValidationError(fmt::format("probabilities must lie in [0, 1] (p_G={}, p_g={})", p_G, p_g));
  return 1.0 - (p_G - p_g);
}

double checked_score(Detector& detector, const ProgramDependenceGraph& graph) {
  const double p = detector.score(graph);
  if (!(p >= 0.0 && p <= 1.0))
    throw ScorerError(fmt::format("{} returned {} for graph \"{}\", outside [0, 1]", detector.name(), p, graph.id));
  return p;
}

Explanation select_path(const ProgramDependenceGraph& pdg, const std::vector<FlowPath>& paths, Detector& detector,
                        std::optional<double> p_G) {
  if (paths.empty()) throw ValidationError("no flow paths; no PSP matched");
  Explanation ex;
  ex.p_G = p_G ? *p_G : checked_score(detector, pdg);
  importance(ex.p_G, 0.0);

  std::map<std::set<NodeId>, double> cache;
  for (const auto& path : paths) {
    ScoredPath sp;
    sp.path = path;
    for (const auto& loc : program_order(path, pdg)) {
      sp.ordered.push_back(loc.node);
      sp.lines.push_back(loc.line);
    }
    const std::set<NodeId> node_set(path.nodes.begin(), path.nodes.end());
    auto it = cache.find(node_set);
    if (it == cache.end()) it = cache.emplace(node_set, checked_score(detector, induced_subgraph(pdg, node_set))).first;
    sp.p_g = it->second;
    sp.is = importance(ex.p_G, sp.p_g);
    ex.candidates.push_back(std::move(sp));
  }

  // IS is monotone in p_g for a fixed p_G, so ranking on p_g avoids rounding ties.
  const auto better = [](const ScoredPath& a, const ScoredPath& b) {
    if (a.p_g != b.p_g) return a.p_g > b.p_g;
    if (a.ordered.size() != b.ordered.size()) return a.ordered.size() < b.ordered.size();
    if (a.ordered != b.ordered) return a.ordered < b.ordered;
    return a.path.nodes < b.path.nodes;
  };
  ex.selected = *std::min_element(ex.candidates.begin(), ex.candidates.end(), better);
  return ex;
}

}  // namespace vulnpath
