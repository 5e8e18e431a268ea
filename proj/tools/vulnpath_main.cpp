// vulnpath: build dependence graphs, explain detector verdicts with backward
// flow paths, train the baseline detector and evaluate line coverage.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vulnpath/corpus.hpp"
#include "vulnpath/error.hpp"
#include "vulnpath/eval.hpp"
#include "vulnpath/external_scorer.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/pdg_builder.hpp"
#include "vulnpath/psp.hpp"
#include "vulnpath/scorer.hpp"
#include "vulnpath/slicer.hpp"

namespace fs = std::filesystem;
using namespace vulnpath;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNoPsp = 2, kScorerFailure = 3 };

struct ScorerSpec {
  enum Kind { builtin, exec, oracle_nodes, oracle_labels } kind;
  std::string arg;
};

ScorerSpec parse_scorer_spec(const std::string& spec) {
  auto starts = [&](std::string_view p) { return spec.rfind(p, 0) == 0; };
  if (starts("builtin:")) return {ScorerSpec::builtin, spec.substr(8)};
  if (starts("exec:")) return {ScorerSpec::exec, spec.substr(5)};
  if (starts("oracle:nodes=")) return {ScorerSpec::oracle_nodes, spec.substr(13)};
  if (spec == "oracle:labels") return {ScorerSpec::oracle_labels, {}};
  throw ValidationError("unknown scorer \"" + spec +
                        "\" (expected builtin:<model.json>, exec:<command>, oracle:nodes=<ids> or oracle:labels)");
}

std::set<NodeId> parse_node_list(const std::string& text) {
  std::set<NodeId> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.insert(NodeId(v));
    } catch (const std::exception&) {
      throw ValidationError("bad node id \"" + item + "\" in oracle:nodes list");
    }
    pos = comma + 1;
  }
  return out;
}

std::unique_ptr<Detector> make_detector(const ScorerSpec& spec, const std::vector<LabeledSample>* dataset,
                                        int timeout_ms) {
  switch (spec.kind) {
    case ScorerSpec::builtin:
      return std::make_unique<BaselineDetector>(load_model(spec.arg));
    case ScorerSpec::exec:
      return std::make_unique<ExternalScorer>(split_command(spec.arg),
                                              ExternalScorerOptions{std::chrono::milliseconds(timeout_ms)});
    case ScorerSpec::oracle_nodes:
      return std::make_unique<ContainsNodesOracle>(parse_node_list(spec.arg));
    case ScorerSpec::oracle_labels:
      if (dataset == nullptr) throw ValidationError("oracle:labels needs a labeled dataset");
      return std::make_unique<LabelOracle>(LabelOracle::from_dataset(*dataset));
  }
  throw ValidationError("unknown scorer");
}

SinkConfig sink_config(const std::string& path) { return path.empty() ? SinkConfig::defaults() : load_sink_config(path); }

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".minic") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

ProgramDependenceGraph load_graph(const fs::path& path) {
  if (path.extension() == ".minic") return build_pdg(read_text_file(path), path.stem().string());
  std::vector<std::string> warnings;
  auto g = read_pdg_json(read_text_file(path), &warnings);
  for (const auto& w : warnings) fmt::print(stderr, "warning: {}: {}\n", path.string(), w);
  return g;
}

Json scored_json(const ScoredPath& sp) {
  Json j = Json::object();
  j["lines"] = sp.lines;
  Json nodes = Json::array();
  for (NodeId id : sp.ordered) nodes.push_back(id.value);
  j["nodes"] = std::move(nodes);
  j["p_g"] = sp.p_g;
  j["is"] = sp.is;
  Json sink = Json::object();
  sink["node"] = sp.path.psp.node.value;
  sink["kind"] = std::string(to_string(sp.path.psp.kind));
  sink["key_vars"] = sp.path.psp.key_vars;
  j["sink"] = std::move(sink);
  Json traversal = Json::array();
  for (NodeId id : sp.path.nodes) traversal.push_back(id.value);
  j["traversal"] = std::move(traversal);
  return j;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") std::cout << text;
  else write_text_file(out_path, text);
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw ValidationError("bad k value \"" + item + "\"");
    }
    pos = comma + 1;
  }
  return ks;
}

std::map<std::string, double> parse_mix(const std::string& text) {
  std::map<std::string, double> mix;
  if (text.empty()) return mix;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) mix[item] = 1.0;
      else mix[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad mix entry \"" + item + "\" (expected CWE=weight)");
    }
    pos = comma + 1;
  }
  return mix;
}

int cmd_build_pdg(const std::vector<std::string>& inputs, const std::string& out_dir, int indent) {
  int status = kOk;
  const auto files = expand_inputs(inputs);
  if (files.empty()) {
    fmt::print(stderr, "error: no input files\n");
    return kInputError;
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);
  for (const auto& file : files) {
    try {
      const auto pdg = build_pdg(read_text_file(file), file.stem().string());
      const fs::path dest = (out_dir.empty() ? file.parent_path() : fs::path(out_dir)) / (file.stem().string() + ".pdg.json");
      write_text_file(dest, write_pdg_json(pdg, indent) + "\n");
      fmt::print("{}\n", dest.string());
    } catch (const std::exception& e) {
      fmt::print(stderr, "{}: {}\n", file.string(), e.what());
      status = kInputError;
    }
  }
  return status;
}

struct ExplainArgs {
  std::string input, scorer, sink_config, dot, out;
  int k = 5;
  double sparsity = 0.5;
  int timeout_ms = 10000;
};

int cmd_explain(const ExplainArgs& a) {
  ProgramDependenceGraph pdg;
  SinkConfig config;
  ScorerSpec spec;
  try {
    pdg = load_graph(a.input);
    config = sink_config(a.sink_config);
    spec = parse_scorer_spec(a.scorer);
    if (spec.kind == ScorerSpec::oracle_labels) throw ValidationError("oracle:labels is only available for eval");
    check(SliceParams{a.k, a.sparsity});
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }

  const auto sinks = extract_sink_nodes(pdg, config);
  const auto paths = generate_slices(pdg, SliceParams{a.k, a.sparsity}, sinks);
  if (paths.empty()) {
    fmt::print(stderr, "no PSP matched in graph \"{}\"\n", pdg.id);
    return kNoPsp;
  }

  Explanation ex;
  try {
    auto detector = make_detector(spec, nullptr, a.timeout_ms);
    ex = select_path(pdg, paths, *detector);
  } catch (const ScorerError& e) {
    fmt::print(stderr, "scorer failure: {}\n", e.what());
    return kScorerFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }

  Json out = Json::object();
  out["id"] = pdg.id;
  out["selected"] = scored_json(ex.selected);
  out["p_G"] = ex.p_G;
  Json candidates = Json::array();
  for (const auto& c : ex.candidates) candidates.push_back(scored_json(c));
  out["candidates"] = std::move(candidates);
  try {
    emit(out.dump(2) + "\n", a.out);
    if (!a.dot.empty()) write_text_file(a.dot, export_dot(pdg, ex.selected.path));
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  return kOk;
}

struct TrainArgs {
  std::string dataset, out;
  TrainParams params;
};

int cmd_train(const TrainArgs& a) {
  try {
    const auto data = read_dataset(a.dataset);
    for (const auto& w : data.warnings) fmt::print(stderr, "warning: {}\n", w);
    const auto result = train_baseline(data.samples, a.params);
    save_model(a.out, result.model);
    fmt::print("trained on {} samples ({} duplicates dropped), {} epochs, loss {:.6f} -> {:.6f}\n", data.samples.size(),
               data.duplicates, a.params.epochs, result.loss_history.front(), result.loss_history.back());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  return kOk;
}

struct EvalArgs {
  std::string dataset, scorer, sink_config, out_dir, ks = "5";
  double sparsity = 0.5, threshold = 0.5;
  int jobs = 1, timeout_ms = 10000;
};

int cmd_eval(const EvalArgs& a) {
  Dataset data;
  EvalParams params;
  SinkConfig config;
  ScorerSpec spec;
  try {
    data = read_dataset(a.dataset);
    for (const auto& w : data.warnings) fmt::print(stderr, "warning: {}\n", w);
    if (data.samples.empty()) throw ValidationError("dataset is empty");
    params.ks = parse_ks(a.ks);
    params.sparsity = a.sparsity;
    params.threshold = a.threshold;
    params.jobs = a.jobs;
    config = sink_config(a.sink_config);
    spec = parse_scorer_spec(a.scorer);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }

  EvalReport report;
  try {
    if (spec.kind == ScorerSpec::exec) {
      report = evaluate(
          data.samples, [&] { return make_detector(spec, nullptr, a.timeout_ms); }, params, config);
    } else {
      auto detector = make_detector(spec, &data.samples, a.timeout_ms);
      report = evaluate(data.samples, *detector, params, config);
    }
  } catch (const ScorerError& e) {
    fmt::print(stderr, "scorer failure: {}\n", e.what());
    return kScorerFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }

  std::string md = render_report(report, ReportFormat::markdown);
  md += "\n";
  for (const auto& o : report.overall) md += fmt::format("mean LC (all CWEs, k={}): {:.4f} over {} samples\n", o.k, o.mean_lc, o.n_samples);
  md += "\n" + render_metrics(report.metrics);
  for (const auto& n : report.notes) md += "\nnote: " + n + "\n";
  std::cout << md;
  try {
    if (!a.out_dir.empty()) {
      fs::create_directories(a.out_dir);
      write_text_file(fs::path(a.out_dir) / "report.md", md);
      write_text_file(fs::path(a.out_dir) / "report.csv", render_report(report, ReportFormat::csv));
      write_text_file(fs::path(a.out_dir) / "samples.csv", render_samples(report, ReportFormat::csv));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  return kOk;
}

int cmd_gen_corpus(const CorpusOptions& options, const std::string& out_dir) {
  try {
    const auto corpus = generate_corpus(options);
    write_corpus(corpus, out_dir);
    const auto vulnerable = std::count_if(corpus.begin(), corpus.end(),
                                          [](const CorpusEntry& e) { return e.sample.label == Label::vulnerable; });
    fmt::print("wrote {} samples ({} vulnerable) to {}\n", corpus.size(), vulnerable, out_dir);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localize vulnerability-triggering statements with backward flow paths"};
  app.require_subcommand(1);

  std::vector<std::string> build_inputs;
  std::string build_out;
  int build_indent = -1;
  auto* build = app.add_subcommand("build-pdg", "Build PDG JSON from MiniC sources (files or directories)");
  build->add_option("inputs", build_inputs, "MiniC files or directories")->required();
  build->add_option("-o,--out-dir", build_out, "Output directory (default: next to each input)");
  build->add_option("--indent", build_indent, "Pretty-print with this indent (default: compact)");

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "Select the most important flow path of one graph");
  explain->add_option("input", ex.input, "PDG JSON (or a .minic source)")->required();
  explain->add_option("--scorer", ex.scorer, "builtin:<model.json> | exec:<command> | oracle:nodes=<id,...>")
      ->required();
  explain->add_option("--k", ex.k, "Maximum nodes per path")->capture_default_str();
  explain->add_option("--sparsity", ex.sparsity, "Sparsity in [0, 1)")->capture_default_str();
  explain->add_option("--sink-config", ex.sink_config, "Sink configuration JSON");
  explain->add_option("--dot", ex.dot, "Also write a DOT rendering with the selected path highlighted");
  explain->add_option("-o,--out", ex.out, "Write the explanation here instead of standard output");
  explain->add_option("--timeout-ms", ex.timeout_ms, "External scorer timeout")->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the built-in baseline detector");
  train->add_option("--dataset", tr.dataset, "Labeled dataset (JSONL)")->required();
  train->add_option("-o,--out", tr.out, "Model file to write")->required();
  train->add_option("--lr", tr.params.lr, "Learning rate")->capture_default_str();
  train->add_option("--epochs", tr.params.epochs, "Full-batch epochs")->capture_default_str();
  train->add_option("--seed", tr.params.seed, "Seed")->capture_default_str();
  train->add_option("--dim", tr.params.dim, "Feature dimension")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate explanations by line coverage");
  eval->add_option("--dataset", ev.dataset, "Labeled dataset (JSONL)")->required();
  eval->add_option("--scorer", ev.scorer, "builtin:<model.json> | exec:<command> | oracle:labels")->required();
  eval->add_option("--k", ev.ks, "Comma-separated k values")->capture_default_str();
  eval->add_option("--sparsity", ev.sparsity, "Sparsity in [0, 1)")->capture_default_str();
  eval->add_option("--threshold", ev.threshold, "Decision threshold on p_G")->capture_default_str();
  eval->add_option("--jobs", ev.jobs, "Worker threads")->capture_default_str();
  eval->add_option("--sink-config", ev.sink_config, "Sink configuration JSON");
  eval->add_option("--out-dir", ev.out_dir, "Write report.md, report.csv and samples.csv here");
  eval->add_option("--timeout-ms", ev.timeout_ms, "External scorer timeout")->capture_default_str();

  CorpusOptions co;
  std::string mix, corpus_out;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic labeled MiniC corpus");
  gen->add_option("--seed", co.seed, "Seed")->capture_default_str();
  gen->add_option("--count", co.count, "Number of samples")->capture_default_str();
  gen->add_option("--mix", mix, "Template weights, e.g. CWE787=1,CWE125=0.5");
  gen->add_option("-o,--out-dir", corpus_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*build) return cmd_build_pdg(build_inputs, build_out, build_indent);
    if (*explain) return cmd_explain(ex);
    if (*train) return cmd_train(tr);
    if (*eval) return cmd_eval(ev);
    if (*gen) {
      co.cwe_mix = parse_mix(mix);
      return cmd_gen_corpus(co, corpus_out);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  return kInputError;
}
