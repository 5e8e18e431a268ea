#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vulnpath/graph.hpp"

namespace vulnpath {

/// CWE tags the generator has templates for.
std::vector<std::string> corpus_cwes();

struct CorpusOptions {
  std::uint64_t seed = 1;
  std::size_t count = 200;
  /// Relative template weights keyed by CWE tag; empty means all templates equally.
  std::map<std::string, double> cwe_mix;
};

struct CorpusEntry {
  std::string name;    ///< file stem, also the graph id
  std::string source;  ///< MiniC text
  LabeledSample sample;
};

/// Templated SARD-style functions: a buffer of size A and an access of size B,
/// vulnerable iff B exceeds A. Vulnerable samples label the triggering line and
/// the buffer declaration; safe samples enlarge the buffer. Deterministic in
/// the seed. Throws ValidationError for count 0 or an unusable mix.
std::vector<CorpusEntry> generate_corpus(const CorpusOptions& options);

/// Writes `<name>.minic` per entry plus `dataset.jsonl` into `dir`.
void write_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& dir);

}  // namespace vulnpath
