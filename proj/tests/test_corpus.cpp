#include <gtest/gtest.h>

#include <filesystem>

#include "vulnpath/corpus.hpp"
#include "vulnpath/error.hpp"
#include "vulnpath/graph_io.hpp"
#include "vulnpath/pdg_builder.hpp"

using namespace vulnpath;

TEST(Corpus, SmallCorpusContract) {
  CorpusOptions o;
  o.seed = 1;
  o.count = 2;
  const auto c = generate_corpus(o);
  ASSERT_EQ(c.size(), 2u);
  for (const auto& e : c) {
    EXPECT_TRUE(validate(e.sample).empty());
    if (e.sample.label == Label::vulnerable) {
      EXPECT_GE(e.sample.vuln_lines.size(), 1u);
      EXPECT_LE(e.sample.vuln_lines.size(), 2u);
    }
  }
}

TEST(Corpus, DeterministicInSeed) {
  CorpusOptions o;
  o.seed = 99;
  o.count = 50;
  const auto a = generate_corpus(o), b = generate_corpus(o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    EXPECT_EQ(a[i].sample, b[i].sample);
  }
  o.seed = 100;
  EXPECT_NE(generate_corpus(o)[0].source + generate_corpus(o)[1].source, a[0].source + a[1].source);
}

TEST(Corpus, MixSelectsTemplates) {
  CorpusOptions o;
  o.count = 20;
  o.cwe_mix = {{"CWE787", 1.0}};
  for (const auto& e : generate_corpus(o)) EXPECT_EQ(e.sample.cwe, "CWE787");
  o.cwe_mix = {{"CWE000", 1.0}};
  EXPECT_THROW(generate_corpus(o), ValidationError);
  o.cwe_mix = {{"CWE787", 0.0}};
  EXPECT_THROW(generate_corpus(o), ValidationError);
  o.cwe_mix.clear();
  o.count = 0;
  EXPECT_THROW(generate_corpus(o), ValidationError);
}

TEST(Corpus, SourcesRebuildToTheirGraphsAndLabelsPointAtCode) {
  CorpusOptions o;
  o.count = 60;
  for (const auto& e : generate_corpus(o)) {
    EXPECT_EQ(build_pdg(e.source, e.name), e.sample.pdg);
    EXPECT_TRUE(validate(e.sample).empty()) << e.name;
  }
}

TEST(Corpus, WritesSourcesAndDataset) {
  const auto dir = std::filesystem::temp_directory_path() / "vulnpath_corpus_test";
  std::filesystem::remove_all(dir);
  CorpusOptions o;
  o.count = 5;
  const auto c = generate_corpus(o);
  write_corpus(c, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / (c[0].name + ".minic")));
  const auto d = read_dataset(dir / "dataset.jsonl");
  EXPECT_EQ(d.samples.size(), 5u);
  std::filesystem::remove_all(dir);
}
