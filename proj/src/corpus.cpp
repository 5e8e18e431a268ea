#include "vulnpath/corpus.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>

#include "vulnpath/error.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/pdg_builder.hpp"

namespace vulnpath {

namespace {

/// Portable draws on top of mt19937_64 (whose output sequence is fixed by the
/// standard, unlike the std distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % n;
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

enum class Role { plain, decl, trigger };

struct Line {
  std::string text;
  Role role = Role::plain;
  bool split_after = true;  ///< distractors may be inserted after this line
};

struct Names {
  std::string buf, src, idx, val, len;
};

const std::vector<int> kVulnerableSizes = {10, 20, 50};
const std::vector<int> kSafeSizes = {128, 256};
const std::vector<int> kAccessSizes = {64, 100};
const std::vector<int> kDistractorNumbers = {2, 3, 4, 5, 7, 8, 9};

using Template = std::function<std::vector<Line>(Rng&, const Names&, int size, int access)>;

std::vector<Line> cwe787(Rng& rng, const Names& n, int size, int access) {
  const std::string copy = rng.below(2) ? "strncpy" : "memcpy";
  return {
      {fmt::format("char {}[{}];", n.buf, size), Role::decl},
      {fmt::format("char {}[{}];", n.src, access)},
      {fmt::format("memset({}, 'A', {} - 1);", n.src, access)},
      {fmt::format("{}[{} - 1] = '\\0';", n.src, access)},
      {fmt::format("{}({}, {}, {});", copy, n.buf, n.src, access), Role::trigger},
      {fmt::format("printLine({});", n.buf)},
  };
}

std::vector<Line> cwe125(Rng&, const Names& n, int size, int access) {
  return {
      {fmt::format("int {}[{}];", n.buf, size), Role::decl},
      {fmt::format("int {} = {};", n.idx, access)},
      {fmt::format("int {} = 0;", n.val)},
      {fmt::format("{} = {}[{}];", n.val, n.buf, n.idx), Role::trigger},
      {fmt::format("printIntLine({});", n.val)},
  };
}

std::vector<Line> cwe119(Rng&, const Names& n, int size, int access) {
  return {
      {fmt::format("char {}[{}];", n.buf, size), Role::decl},
      {fmt::format("int {} = 0;", n.idx)},
      {fmt::format("int {} = {};", n.len, access)},
      {fmt::format("while ({} < {}) {{", n.idx, n.len), Role::plain, false},
      {fmt::format("    {}[{}] = 'A';", n.buf, n.idx), Role::trigger, false},
      {fmt::format("    {}++;", n.idx), Role::plain, false},
      {"}"},
      {fmt::format("printLine({});", n.buf)},
  };
}

std::vector<Line> cwe190(Rng&, const Names& n, int size, int access) {
  return {
      {fmt::format("char {}[{}];", n.buf, size), Role::decl},
      {fmt::format("char {}[{}];", n.src, access)},
      {fmt::format("int {} = {} / 2;", n.len, access)},
      {fmt::format("{} = {} * 2;", n.len, n.len)},
      {fmt::format("memset({}, 'A', {});", n.src, n.len)},
      {fmt::format("memcpy({}, {}, {});", n.buf, n.src, n.len), Role::trigger},
      {fmt::format("printLine({});", n.buf)},
  };
}

const std::map<std::string, Template>& templates() {
  static const std::map<std::string, Template> t = {
      {"CWE119", cwe119}, {"CWE125", cwe125}, {"CWE190", cwe190}, {"CWE787", cwe787}};
  return t;
}

std::vector<Line> distractor(Rng& rng, const std::string& var) {
  const int a = rng.pick(kDistractorNumbers);
  const int b = rng.pick(kDistractorNumbers);
  switch (rng.below(3)) {
    case 0:
      return {{fmt::format("int {} = {};", var, a)}, {fmt::format("{} = {} + {};", var, var, b)}};
    case 1:
      return {{fmt::format("int {} = {};", var, a)}, {fmt::format("printIntLine({});", var)}};
    default:
      return {{fmt::format("int {} = {};", var, a)},
              {fmt::format("if ({} > {}) {{", var, b), Role::plain, false},
              {"    printLine(\"ok\");", Role::plain, false},
              {"}"}};
  }
}

std::string render(const std::string& name, const std::vector<Line>& body, std::set<int>& labeled) {
  std::string out = fmt::format("void {}() {{\n", name);
  int line = 2;
  for (const auto& l : body) {
    if (l.role != Role::plain) labeled.insert(line);
    out += "    " + l.text + "\n";
    ++line;
  }
  out += "}\n";
  return out;
}

}  // namespace

std::vector<std::string> corpus_cwes() {
  std::vector<std::string> out;
  for (const auto& [cwe, fn] : templates()) out.push_back(cwe);
  return out;
}

std::vector<CorpusEntry> generate_corpus(const CorpusOptions& options) {
  if (options.count == 0) throw ValidationError("corpus size must be at least 1");
  std::vector<std::pair<std::string, double>> mix;
  double total = 0;
  if (options.cwe_mix.empty()) {
    for (const auto& cwe : corpus_cwes()) mix.emplace_back(cwe, 1.0);
  } else {
    for (const auto& [cwe, w] : options.cwe_mix) {
      if (!templates().count(cwe)) throw ValidationError("no corpus template for " + cwe);
      if (!(w >= 0)) throw ValidationError("negative weight for " + cwe);
      if (w > 0) mix.emplace_back(cwe, w);
    }
  }
  for (const auto& [cwe, w] : mix) total += w;
  if (mix.empty() || !(total > 0)) throw ValidationError("CWE mix has no positive weight");

  const std::vector<std::string> buf_names = {"data", "buf", "dest", "dataBuffer", "buffer", "dst"};
  const std::vector<std::string> src_names = {"source", "src", "input"};
  const std::vector<std::string> idx_names = {"i", "idx", "index", "pos"};
  const std::vector<std::string> val_names = {"value", "result", "out"};
  const std::vector<std::string> len_names = {"len", "n", "size", "count"};
  const std::vector<std::string> extra_names = {"tmp", "flag", "level", "mode", "total", "limit"};

  Rng rng(options.seed);
  std::vector<CorpusEntry> corpus;
  std::set<std::string> bodies;
  while (corpus.size() < options.count) {
    double r = rng.unit() * total;
    std::string cwe = mix.back().first;
    for (const auto& [c, w] : mix) {
      if (r < w) {
        cwe = c;
        break;
      }
      r -= w;
    }
    const bool vulnerable = rng.below(2) == 0;

    std::vector<Line> body;
    for (int attempt = 0;; ++attempt) {
      const Names names{rng.pick(buf_names), rng.pick(src_names), rng.pick(idx_names), rng.pick(val_names),
                        rng.pick(len_names)};
      const int size = vulnerable ? rng.pick(kVulnerableSizes) : rng.pick(kSafeSizes);
      const int access = rng.pick(kAccessSizes);
      body = templates().at(cwe)(rng, names, size, access);

      std::vector<std::string> pool = extra_names;
      const int groups = 1 + static_cast<int>(rng.below(3));
      for (int g = 0; g < groups; ++g) {
        const auto k = rng.below(pool.size());
        const std::string var = pool[k];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<std::size_t> slots{0};
        for (std::size_t i = 0; i < body.size(); ++i)
          if (body[i].split_after) slots.push_back(i + 1);
        const std::size_t at = slots[rng.below(slots.size())];
        auto lines = distractor(rng, var);
        body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), lines.begin(), lines.end());
      }
      std::string key;
      for (const auto& l : body) key += l.text + "\n";
      if (bodies.insert(key).second || attempt >= 100) break;
    }

    CorpusEntry entry;
    entry.name = fmt::format("{}_{:04d}", cwe, corpus.size());
    std::set<int> labeled;
    entry.source = render(entry.name, body, labeled);
    entry.sample.pdg = build_pdg(entry.source, entry.name);
    entry.sample.cwe = cwe;
    entry.sample.label = vulnerable ? Label::vulnerable : Label::safe;
    if (vulnerable) entry.sample.vuln_lines = std::move(labeled);
    corpus.push_back(std::move(entry));
  }
  return corpus;
}

void write_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<LabeledSample> samples;
  for (const auto& e : corpus) {
    write_text_file(dir / (e.name + ".minic"), e.source);
    samples.push_back(e.sample);
  }
  write_dataset(dir / "dataset.jsonl", samples);
}

}  // namespace vulnpath
