#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "groundcheck/dataset.hpp"
#include "groundcheck/penman.hpp"
#include "helpers.hpp"

using namespace groundcheck;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& line : lines) out << line << "\n";
}

const char* kGood1 =
    R"x({"id":"a","label":0,"reference_sentences":[{"text":"a boy","penman":"(b / boy)"}],"response_sentences":[{"text":"a boy","penman":"(b / boy)"}]})x";
const char* kGood2 =
    R"x({"id":"b","label":1,"reference_sentences":[{"text":"a cat","penman":"(c / cat)"}],"response_sentences":[{"text":"a dog","penman":"(d / dog)"}]})x";
const char* kGood3 =
    R"x({"id":"c","label":0,"reference_sentences":[{"text":"x","penman":"(x / x-thing)"}],"response_sentences":[{"text":"x","penman":"(x / x-thing)"}]})x";
const char* kNoLabel =
    R"x({"id":"bad","reference_sentences":[{"text":"a","penman":"(a / a-thing)"}],"response_sentences":[{"text":"a","penman":"(a / a-thing)"}]})x";

}  // namespace

TEST_CASE("ingest accepts valid lines") {
  const std::string path = temp_file("gc_ingest_ok.jsonl");
  write_lines(path, {kGood1, kGood2, kGood3});
  const IngestResult result = ingest_jsonl(path);
  CHECK(result.dataset.examples.size() == 3);
  CHECK(result.dataset.examples[1].label == 1);
  CHECK(result.skipped.empty());
  std::filesystem::remove(path);
}

TEST_CASE("ingest names the offending line") {
  const std::string path = temp_file("gc_ingest_bad.jsonl");
  write_lines(path, {kGood1, kNoLabel, kGood2});
  CHECK_THROWS_WITH_AS(ingest_jsonl(path), doctest::Contains("line 2"), DataError);
  SUBCASE("skip-bad collects instead") {
    const IngestResult result = ingest_jsonl(path, {true});
    CHECK(result.dataset.examples.size() == 2);
    REQUIRE(result.skipped.size() == 1);
    CHECK(result.skipped[0].line == 2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("duplicate ids are always fatal") {
  const std::string path = temp_file("gc_ingest_dup.jsonl");
  write_lines(path, {kGood1, kGood1});
  CHECK_THROWS_AS(ingest_jsonl(path), DataError);
  CHECK_THROWS_AS(ingest_jsonl(path, {true}), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("missing file is a data error") {
  CHECK_THROWS_AS(ingest_jsonl("/nonexistent/gc.jsonl"), DataError);
}

TEST_CASE("jsonl round trip") {
  const Dataset dataset = synth_corpus({12, 0.5, 3});
  const std::string path = temp_file("gc_roundtrip.jsonl");
  write_jsonl(dataset, path);
  const IngestResult again = ingest_jsonl(path);
  REQUIRE(again.dataset.examples.size() == dataset.examples.size());
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    CHECK(example_to_json_line(again.dataset.examples[i]) ==
          example_to_json_line(dataset.examples[i]));
  }
  std::filesystem::remove(path);
}

TEST_CASE("split produces the documented partition") {
  const SplitIndices s = split(100, {0.70, 0.15, 0.15, 1});
  CHECK(s.train.size() == 70);
  CHECK(s.validation.size() == 15);
  CHECK(s.test.size() == 15);

  SUBCASE("same seed, same split") {
    const SplitIndices t = split(100, {0.70, 0.15, 0.15, 1});
    CHECK(s.train == t.train);
    CHECK(s.test == t.test);
  }
  SUBCASE("different seed differs") {
    const SplitIndices t = split(100, {0.70, 0.15, 0.15, 2});
    CHECK(s.train != t.train);
  }
  SUBCASE("disjoint cover") {
    std::set<std::size_t> all;
    for (const auto part : {&s.train, &s.validation, &s.test}) {
      for (const std::size_t i : *part) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == 100);
  }
}

TEST_CASE("split validation") {
  CHECK_THROWS(split(2, {0.70, 0.15, 0.15, 0}));
  CHECK_THROWS(split(100, {0.5, 0.2, 0.2, 0}));      // does not sum to 1
  CHECK_THROWS(split(4, {0.98, 0.01, 0.01, 0}));     // empty partitions
}

TEST_CASE("synthetic corpus contracts") {
  const Dataset dataset = synth_corpus({100, 0.5, 21});
  REQUIRE(dataset.examples.size() == 100);

  int positives = 0;
  for (const auto& record : dataset.examples) positives += record.label;
  CHECK(positives >= 45);
  CHECK(positives <= 55);

  auto concept_labels = [](const std::vector<SentenceInput>& sentences) {
    std::set<std::string> labels;
    for (const auto& s : sentences) {
      const auto g = penman::parse(s.penman, s.text);
      for (const auto& [var, concept_label] : g.variables) labels.insert(concept_label);
    }
    return labels;
  };

  for (const auto& record : dataset.examples) {
    const auto ref_labels = concept_labels(record.reference_sentences);
    const auto resp_labels = concept_labels(record.response_sentences);
    std::size_t unsupported = 0;
    for (const auto& label : resp_labels) {
      if (!ref_labels.count(label)) ++unsupported;
    }
    if (record.label == 0) {
      CHECK(unsupported == 0);  // supported: every response concept is grounded
    } else {
      CHECK(unsupported >= 1);  // hallucinated: at least one foreign concept
    }
  }

  SUBCASE("deterministic under the seed") {
    const Dataset again = synth_corpus({100, 0.5, 21});
    REQUIRE(again.examples.size() == dataset.examples.size());
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
      CHECK(example_to_json_line(again.examples[i]) ==
            example_to_json_line(dataset.examples[i]));
    }
  }
  SUBCASE("alignments point at real tokens") {
    for (const auto& record : dataset.examples) {
      for (const auto& s : record.reference_sentences) {
        std::size_t tokens = 1;
        for (const char c : s.text) tokens += c == ' ' ? 1 : 0;
        for (const auto& [var, indices] : s.alignments) {
          for (const int t : indices) {
            CHECK(t >= 0);
            CHECK(static_cast<std::size_t>(t) < tokens);
          }
        }
      }
    }
  }
}

TEST_CASE("synthetic corpus validates options") {
  CHECK_THROWS(synth_corpus({5, 0.5, 0}));
  CHECK_THROWS(synth_corpus({100, 1.5, 0}));
}
