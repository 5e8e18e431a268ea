#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulnpath/graph.hpp"
#include "vulnpath/psp.hpp"
#include "vulnpath/scorer.hpp"
#include "vulnpath/slicer.hpp"

namespace vulnpath {

/// |lines(path) ∩ vuln_lines| / |vuln_lines|. Throws ValidationError
/// "sample has no labeled lines" when vuln_lines is empty.
double line_coverage(const FlowPath& path, const ProgramDependenceGraph& pdg, const std::set<int>& vuln_lines);

struct DetectionMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double acc = 0, fpr = 0, fnr = 0, recall = 0, precision = 0, f1 = 0;
  /// Set when the denominator is zero; the value is then reported as 0.
  bool fpr_undefined = false, fnr_undefined = false, precision_undefined = false, f1_undefined = false;
};

/// Positives are `true`. Throws ValidationError on length mismatch or empty input.
DetectionMetrics detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels);

struct EvalParams {
  std::vector<int> ks{5};
  double sparsity = 0.5;
  double threshold = 0.5;  ///< p_G >= threshold predicts vulnerable
  int jobs = 1;
};

struct SampleRow {
  std::string id;
  std::string cwe;
  bool vulnerable = false;
  std::optional<double> p_G;  ///< empty when scoring the whole graph failed
  bool predicted = false;
  int k = 0;                  ///< 0 for samples that were not explained
  std::optional<double> lc;   ///< true positives only
  std::vector<int> lines;     ///< selected path, program order
  std::string note;           ///< "no PSP", scorer error text, ...
};

struct CweAggregate {
  std::string cwe;
  int k = 0;
  double mean_lc = 0.0;
  std::size_t n_samples = 0;
};

struct EvalReport {
  std::vector<SampleRow> rows;            ///< dataset order, then k
  std::vector<CweAggregate> aggregates;   ///< sorted by (cwe, k)
  std::vector<CweAggregate> overall;      ///< cwe "all", one per k
  DetectionMetrics metrics;               ///< samples whose p_G is known
  std::size_t scorer_errors = 0;
  std::size_t true_positives = 0;
  std::size_t no_psp = 0;                 ///< (sample, k) pairs explained with LC = 0 for lack of paths
  std::vector<std::string> notes;
};

/// Per sample: p_G decides the prediction; every true positive is sliced and
/// explained for each k and scored by line coverage. A scorer failure marks
/// the sample and evaluation continues. The detector is shared across worker
/// threads only if it is reentrant.
EvalReport evaluate(const std::vector<LabeledSample>& dataset, Detector& detector, const EvalParams& params,
                    const SinkConfig& config);

/// Same, with one detector per worker thread.
EvalReport evaluate(const std::vector<LabeledSample>& dataset, const DetectorFactory& factory,
                    const EvalParams& params, const SinkConfig& config);

enum class ReportFormat { markdown, csv };

/// Columns cwe, k, mean_LC, n_samples.
std::string render_report(const EvalReport& report, ReportFormat format);
/// Columns id, cwe, label, p_G, predicted, k, LC, lines, note.
std::string render_samples(const EvalReport& report, ReportFormat format);
/// Confusion matrix and detection metrics as a small markdown table.
std::string render_metrics(const DetectionMetrics& metrics);

std::string csv_field(std::string_view text);

}  // namespace vulnpath
