#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "groundcheck/config.hpp"
#include "groundcheck/dataset.hpp"
#include "groundcheck/metrics.hpp"

namespace groundcheck {

/// A stage-level failure: missing or mismatched upstream artifact, provider
/// breakdown, unwritable output. Mapped to exit code 3 by the CLI.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParsedExample {
  std::string id;
  int label = 0;
  DocumentGraph reference;
  DocumentGraph response;
};

struct ProcessedExample {
  std::string id;
  int label = 0;
  AlignedGraph graph;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingConfig& config);

/// Runs index-parallel work with deterministic output slots. threads == 1
/// runs inline; 0 uses hardware concurrency. The first exception, if any,
/// is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Per-example stage orchestration over one effective config.
class Pipeline {
 public:
  explicit Pipeline(Config config);

  const Config& config() const { return config_; }
  EmbeddingProvider& provider();
  const FrameDb* frames() const { return frames_ ? &*frames_ : nullptr; }

  ParsedExample parse_example(const ExampleRecord& record) const;
  ProcessedExample align_example(const ParsedExample& parsed);
  ProcessedExample solve_example(ProcessedExample processed) const;
  GraphInstance featurize_example(const ProcessedExample& processed);

  std::vector<ParsedExample> parse_dataset(const Dataset& dataset);
  std::vector<ProcessedExample> align_parsed(const std::vector<ParsedExample>& parsed);
  std::vector<ProcessedExample> solve_aligned(std::vector<ProcessedExample> aligned) const;
  std::vector<GraphInstance> featurize_processed(const std::vector<ProcessedExample>& processed);

  /// parse -> align -> flow -> featurize for one record; used by sweeps and
  /// the end-to-end tests.
  GraphInstance process_record(const ExampleRecord& record);

 private:
  int worker_threads() const;

  Config config_;
  std::unique_ptr<EmbeddingProvider> provider_;
  std::optional<FrameDb> frames_;
};

// --------------------------------------------------------------------------
// Versioned artifacts. Every JSON artifact embeds the effective config and
// its hash; readers refuse artifacts whose hash differs from the current
// effective config.

inline constexpr int kArtifactFormatVersion = 1;

void write_graphs_artifact(const std::string& path, const Config& config,
                           const std::vector<ParsedExample>& examples);
std::vector<ParsedExample> read_graphs_artifact(const std::string& path, const Config& config);

void write_aligned_artifact(const std::string& path, const Config& config,
                            const std::vector<ProcessedExample>& examples, bool flows_solved);
std::vector<ProcessedExample> read_aligned_artifact(const std::string& path,
                                                    const Config& config, bool require_flows);

/// Binary container (little-endian doubles): per example id, label, feature
/// matrix, and normalized adjacency. Graphs stay in the flowed artifact.
void write_features_artifact(const std::string& path, const Config& config,
                             const std::vector<GraphInstance>& instances);
std::vector<GraphInstance> read_features_artifact(const std::string& path,
                                                  const Config& config);

}  // namespace groundcheck
