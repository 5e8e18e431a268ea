#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpath/graph.hpp"
#include "vulnpath/graph_io.hpp"

namespace vulnpath {

inline constexpr std::size_t kDefaultDim = 1024;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Raw token counts per bucket (token hash mod `dim`), before normalization.
std::vector<double> hashed_counts(const ProgramDependenceGraph& graph, std::size_t dim = kDefaultDim);

/// L2-normalized hashed bag of tokens over every node's code; zero vector for
/// an empty graph.
std::vector<double> vectorize(const ProgramDependenceGraph& graph, std::size_t dim = kDefaultDim);

/// Vulnerability detector: maps a (sub)graph to a probability.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;
  virtual double score(const ProgramDependenceGraph& graph) = 0;
  /// True when score() may be called concurrently from several threads.
  virtual bool reentrant() const { return false; }
};

using DetectorFactory = std::function<std::unique_ptr<Detector>()>;

struct BaselineModel {
  std::size_t dim = kDefaultDim;
  std::vector<double> w = std::vector<double>(kDefaultDim, 0.0);
  double b = 0.0;
};

double sigmoid(double z);
double predict(const BaselineModel& model, const std::vector<double>& x);

Json model_to_json(const BaselineModel& model);
/// Expects exactly {"D","w","b"} with |w| = D and finite entries.
BaselineModel model_from_json(const Json& value);
void save_model(const std::filesystem::path& path, const BaselineModel& model);
BaselineModel load_model(const std::filesystem::path& path);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

/// Mean binary cross-entropy of sigmoid(w.x + b) against labels in {0, 1},
/// with its analytic gradient.
LossGradient loss_and_gradient(const BaselineModel& model, const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& ys);

struct TrainParams {
  double lr = 2.0;
  int epochs = 300;
  std::uint64_t seed = 0;  ///< recorded only; full-batch descent from zero weights is deterministic
  std::size_t dim = kDefaultDim;
};

struct TrainResult {
  BaselineModel model;
  std::vector<double> loss_history;  ///< loss before each epoch, then the final loss
};

/// Full-batch gradient descent on whole graphs. Throws ValidationError
/// "degenerate training set" unless both labels occur.
TrainResult train_baseline(const std::vector<LabeledSample>& dataset, const TrainParams& params);
TrainResult train_baseline(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                           const TrainParams& params);

class BaselineDetector final : public Detector {
 public:
  explicit BaselineDetector(BaselineModel model) : model_(std::move(model)) {}
  std::string name() const override { return "baseline"; }
  double score(const ProgramDependenceGraph& graph) override { return predict(model_, vectorize(graph, model_.dim)); }
  bool reentrant() const override { return true; }
  const BaselineModel& model() const noexcept { return model_; }

 private:
  BaselineModel model_;
};

/// `hi` for graphs containing every required node, `lo` otherwise.
class ContainsNodesOracle final : public Detector {
 public:
  ContainsNodesOracle(std::set<NodeId> required, double hi = 0.95, double lo = 0.2)
      : required_(std::move(required)), hi_(hi), lo_(lo) {}
  std::string name() const override { return "oracle:nodes"; }
  double score(const ProgramDependenceGraph& graph) override;
  bool reentrant() const override { return true; }

 private:
  std::set<NodeId> required_;
  double hi_, lo_;
};

/// Knows the labeled lines of every sample (by graph id) and scores a graph by
/// the fraction of those lines it contains: lo + (hi - lo) * covered / total.
/// Unknown ids and safe samples score `lo`.
class LabelOracle final : public Detector {
 public:
  explicit LabelOracle(std::map<std::string, std::set<int>> vuln_lines, double hi = 0.95, double lo = 0.2)
      : lines_(std::move(vuln_lines)), hi_(hi), lo_(lo) {}
  static LabelOracle from_dataset(const std::vector<LabeledSample>& dataset, double hi = 0.95, double lo = 0.2);
  std::string name() const override { return "oracle:labels"; }
  double score(const ProgramDependenceGraph& graph) override;
  bool reentrant() const override { return true; }

 private:
  std::map<std::string, std::set<int>> lines_;
  double hi_, lo_;
};

class FunctionDetector final : public Detector {
 public:
  FunctionDetector(std::string name, std::function<double(const ProgramDependenceGraph&)> fn, bool reentrant = true)
      : name_(std::move(name)), fn_(std::move(fn)), reentrant_(reentrant) {}
  std::string name() const override { return name_; }
  double score(const ProgramDependenceGraph& graph) override { return fn_(graph); }
  bool reentrant() const override { return reentrant_; }

 private:
  std::string name_;
  std::function<double(const ProgramDependenceGraph&)> fn_;
  bool reentrant_;
};

/// 1 - (p_G - p_g). Throws ValidationError unless both lie in [0, 1].
double importance(double p_G, double p_g);

struct ScoredPath {
  FlowPath path;
  std::vector<NodeId> ordered;  ///< program order
  std::vector<int> lines;       ///< program order
  double p_g = 0.0;
  double is = 0.0;
};

struct Explanation {
  ScoredPath selected;
  double p_G = 0.0;
  std::vector<ScoredPath> candidates;  ///< input order
};

/// Scores each path as its induced subgraph and keeps the most important one.
/// Ties go to the shorter path, then to the smaller program-ordered id list,
/// then to the smaller traversal sequence.
/// `p_G` may be supplied when already known. Throws ValidationError for an
/// empty path list and ScorerError for probabilities outside [0, 1].
Explanation select_path(const ProgramDependenceGraph& pdg, const std::vector<FlowPath>& paths, Detector& detector,
                        std::optional<double> p_G = std::nullopt);

/// Runs the detector and checks the result is a probability.
double checked_score(Detector& detector, const ProgramDependenceGraph& graph);

}  // namespace vulnpath
