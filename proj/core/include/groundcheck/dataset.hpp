#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace groundcheck {

/// A data problem in the input (schema violation, bad reference, malformed
/// line). Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SentenceInput {
  std::string text;
  std::string penman;
  std::map<std::string, std::vector<int>> alignments;  // sidecar, variable -> tokens
};

/// One labeled reference-response pair; label 1 means hallucinated or
/// unsupported.
struct ExampleRecord {
  std::string id;
  std::vector<SentenceInput> reference_sentences;
  std::vector<SentenceInput> response_sentences;
  int label = 0;
};

struct Dataset {
  std::vector<ExampleRecord> examples;
};

struct IngestOptions {
  bool skip_bad = false;
};

struct IngestIssue {
  int line = 0;
  std::string message;
};

struct IngestResult {
  Dataset dataset;
  std::vector<IngestIssue> skipped;  // populated only with skip_bad
};

/// Reads one ExampleRecord per JSONL line. Malformed lines raise a DataError
/// naming the line number unless skip_bad is set, in which case they are
/// collected. Duplicate ids are always an error.
IngestResult ingest_jsonl(const std::string& path, const IngestOptions& options = {});

void write_jsonl(const Dataset& dataset, const std::string& path);

std::string example_to_json_line(const ExampleRecord& record);
ExampleRecord example_from_json_line(const std::string& line);

struct SplitSpec {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded shuffle followed by a contiguous partition; each split's size is
/// within one element of its exact fraction, and all must be non-empty.
SplitIndices split(std::size_t dataset_size, const SplitSpec& spec);

struct SynthOptions {
  std::size_t n = 100;
  double hallucination_rate = 0.5;
  std::uint64_t seed = 0;
};

/// Template-generated corpus for desk-scale evaluation. Supported responses
/// reuse concept structure from the reference; hallucinated responses swap
/// in concepts absent from the reference. Positive labels are an exact
/// quota of round(n * rate), shuffled. Every concept carries token
/// alignments into its synthetic sentence text.
Dataset synth_corpus(const SynthOptions& options);

}  // namespace groundcheck
