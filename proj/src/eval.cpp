#include "vulnpath/eval.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

namespace vulnpath {

double line_coverage(const FlowPath& path, const ProgramDependenceGraph& pdg, const std::set<int>& vuln_lines) {
  if (vuln_lines.empty()) throw ValidationError("sample has no labeled lines");
  std::set<int> covered;
  for (const auto& loc : program_order(path, pdg))
    if (vuln_lines.count(loc.line)) covered.insert(loc.line);
  return static_cast<double>(covered.size()) / static_cast<double>(vuln_lines.size());
}

DetectionMetrics detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  if (predictions.size() != labels.size())
    throw ValidationError(fmt::format("{} predictions for {} labels", predictions.size(), labels.size()));
  if (predictions.empty()) throw ValidationError("no samples");
  DetectionMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] && labels[i]) ++m.tp;
    else if (predictions[i]) ++m.fp;
    else if (labels[i]) ++m.fn;
    else ++m.tn;
  }
  auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  bool unused = false;
  m.acc = ratio(m.tp + m.tn, labels.size(), unused);
  m.fpr = ratio(m.fp, m.fp + m.tn, m.fpr_undefined);
  m.fnr = ratio(m.fn, m.fn + m.tp, m.fnr_undefined);
  bool recall_undefined = false;
  m.recall = ratio(m.tp, m.tp + m.fn, recall_undefined);
  m.precision = ratio(m.tp, m.tp + m.fp, m.precision_undefined);
  if (m.precision_undefined || m.precision + m.recall == 0.0) {
    m.f1 = 0.0;
    m.f1_undefined = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

namespace {

struct SampleResult {
  std::vector<SampleRow> rows;
  bool scorer_error = false;
};

SampleResult evaluate_sample(const LabeledSample& sample, Detector& detector, const EvalParams& params,
                             const SinkConfig& config) {
  SampleResult out;
  SampleRow base;
  base.id = sample.pdg.id;
  base.cwe = sample.cwe;
  base.vulnerable = sample.label == Label::vulnerable;
  try {
    base.p_G = checked_score(detector, sample.pdg);
  } catch (const ScorerError& e) {
    base.note = e.what();
    out.scorer_error = true;
    out.rows.push_back(std::move(base));
    return out;
  }
  base.predicted = *base.p_G >= params.threshold;
  if (!(base.vulnerable && base.predicted)) {
    out.rows.push_back(std::move(base));
    return out;
  }

  const auto sinks = extract_sink_nodes(sample.pdg, config.for_cwe(sample.cwe));
  for (int k : params.ks) {
    SampleRow row = base;
    row.k = k;
    const auto paths = generate_slices(sample.pdg, SliceParams{k, params.sparsity}, sinks);
    if (paths.empty()) {
      row.lc = 0.0;
      row.note = "no PSP";
    } else {
      try {
        const auto ex = select_path(sample.pdg, paths, detector, base.p_G);
        row.lc = line_coverage(ex.selected.path, sample.pdg, sample.vuln_lines);
        row.lines = ex.selected.lines;
      } catch (const ScorerError& e) {
        row.note = e.what();
        out.scorer_error = true;
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

EvalReport assemble(const std::vector<LabeledSample>& dataset, std::vector<SampleResult> results) {
  EvalReport report;
  std::vector<bool> predictions, labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto& r = results[i];
    if (r.scorer_error) ++report.scorer_errors;
    const SampleRow& first = r.rows.front();
    if (first.p_G) {
      predictions.push_back(first.predicted);
      labels.push_back(first.vulnerable);
      if (first.predicted && first.vulnerable) ++report.true_positives;
    }
    for (auto& row : r.rows) {
      if (row.note == "no PSP") ++report.no_psp;
      report.rows.push_back(std::move(row));
    }
  }
  if (!predictions.empty()) report.metrics = detection_metrics(predictions, labels);

  // Rows whose explanation failed carry no LC and stay out of the means.
  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> by_cwe;
  std::map<int, std::pair<double, std::size_t>> by_k;
  for (const auto& row : report.rows) {
    if (!row.lc) continue;
    for (auto* s : {&by_cwe[{row.cwe, row.k}], &by_k[row.k]}) {
      s->first += *row.lc;
      ++s->second;
    }
  }
  for (const auto& [key, s] : by_cwe)
    report.aggregates.push_back({key.first, key.second, s.first / static_cast<double>(s.second), s.second});
  for (const auto& [k, s] : by_k)
    report.overall.push_back({"all", k, s.first / static_cast<double>(s.second), s.second});

  if (report.true_positives == 0) report.notes.push_back("no TP; LC undefined");
  if (report.no_psp > 0)
    report.notes.push_back(fmt::format("{} explanation(s) found no PSP and count as LC = 0", report.no_psp));
  if (report.scorer_errors > 0)
    report.notes.push_back(fmt::format("{} sample(s) hit scorer errors", report.scorer_errors));
  return report;
}

template <typename DetectorFor>
std::vector<SampleResult> run_parallel(const std::vector<LabeledSample>& dataset, const EvalParams& params,
                                       const SinkConfig& config, int jobs, DetectorFor&& detector_for) {
  std::vector<SampleResult> results(dataset.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&](int w) {
    try {
      Detector& detector = detector_for(w);
      for (std::size_t i = next++; i < dataset.size(); i = next++)
        results[i] = evaluate_sample(dataset[i], detector, params, config);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (jobs <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

void check_params(const EvalParams& params) {
  if (params.ks.empty()) throw ValidationError("no k values given");
  for (int k : params.ks) check(SliceParams{k, params.sparsity});
  if (params.jobs < 1) throw ValidationError("jobs must be >= 1");
}

int worker_count(const EvalParams& params, std::size_t samples) {
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(params.jobs, samples)));
}

}  // namespace

EvalReport evaluate(const std::vector<LabeledSample>& dataset, Detector& detector, const EvalParams& params,
                    const SinkConfig& config) {
  check_params(params);
  const int jobs = detector.reentrant() ? worker_count(params, dataset.size()) : 1;
  auto results = run_parallel(dataset, params, config, jobs, [&](int) -> Detector& { return detector; });
  return assemble(dataset, std::move(results));
}

EvalReport evaluate(const std::vector<LabeledSample>& dataset, const DetectorFactory& factory,
                    const EvalParams& params, const SinkConfig& config) {
  check_params(params);
  const int jobs = worker_count(params, dataset.size());
  std::vector<std::unique_ptr<Detector>> detectors(static_cast<std::size_t>(jobs));
  auto results = run_parallel(dataset, params, config, jobs, [&](int w) -> Detector& {
    detectors[static_cast<std::size_t>(w)] = factory();
    return *detectors[static_cast<std::size_t>(w)];
  });
  return assemble(dataset, std::move(results));
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string md_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                         ReportFormat format) {
  std::string out;
  if (format == ReportFormat::csv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
  auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) out += ' ' + md_cell(c) + " |";
    out += '\n';
  };
  line(header);
  out += '|';
  for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += '\n';
  for (const auto& r : rows) line(r);
  return out;
}

std::string fixed4(double x) { return fmt::format("{:.4f}", x); }

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& a : report.aggregates)
    rows.push_back({a.cwe, std::to_string(a.k), fixed4(a.mean_lc), std::to_string(a.n_samples)});
  return render_table({"cwe", "k", "mean_LC", "n_samples"}, rows, format);
}

std::string render_samples(const EvalReport& report, ReportFormat format) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.rows) {
    std::string lines;
    for (int l : r.lines) lines += (lines.empty() ? "" : " ") + std::to_string(l);
    rows.push_back({r.id, r.cwe, r.vulnerable ? "1" : "0", r.p_G ? fixed4(*r.p_G) : "", r.predicted ? "1" : "0",
                    r.k ? std::to_string(r.k) : "", r.lc ? fixed4(*r.lc) : "", lines, r.note});
  }
  return render_table({"id", "cwe", "label", "p_G", "predicted", "k", "LC", "lines", "note"}, rows, format);
}

std::string render_metrics(const DetectionMetrics& m) {
  auto value = [](double v, bool undefined) { return undefined ? fixed4(v) + " (undefined)" : fixed4(v); };
  std::vector<std::vector<std::string>> rows = {
      {"TP", std::to_string(m.tp)},
      {"FP", std::to_string(m.fp)},
      {"TN", std::to_string(m.tn)},
      {"FN", std::to_string(m.fn)},
      {"ACC", fixed4(m.acc)},
      {"FPR", value(m.fpr, m.fpr_undefined)},
      {"FNR", value(m.fnr, m.fnr_undefined)},
      {"R", value(m.recall, m.fnr_undefined)},
      {"P", value(m.precision, m.precision_undefined)},
      {"F1", value(m.f1, m.f1_undefined)},
  };
  return render_table({"metric", "value"}, rows, ReportFormat::markdown);
}

}  // namespace vulnpath
