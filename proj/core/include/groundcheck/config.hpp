#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundcheck/align.hpp"
#include "groundcheck/dataset.hpp"
#include "groundcheck/embedding.hpp"
#include "groundcheck/flow.hpp"
#include "groundcheck/gnn.hpp"
#include "groundcheck/intervene.hpp"
#include "groundcheck/train.hpp"

namespace groundcheck {

struct EmbeddingConfig {
  int dimension = kEmbeddingDim;
  std::string provider = "test";  // "test" or "subprocess:<command>"
  std::uint64_t test_seed = 0;
  std::string frames_path;        // optional PropBank frame database
  int subprocess_timeout_ms = 10000;
  int subprocess_retries = 1;
  EmbedHyperParams hyper;
};

struct FlowConfig {
  FlowOrientation orientation = FlowOrientation::RespToRef;
  IntraCapacityOptions intra_capacity{};
};

struct GnnRunConfig {
  EdgeWeighting edge_weighting = EdgeWeighting::Flow;
};

struct InterveneConfig {
  std::vector<double> fractions = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::string> kinds = {"remove", "rewire"};
  FlowRefresh flow_refresh = FlowRefresh::Resolve;
};

struct RuntimeConfig {
  int threads = 0;  // 0 = hardware concurrency; 1 = serial
};

/// Effective run configuration: a single declarative document. CLI flags
/// override file values; the effective config is echoed into every artifact
/// and its hash (seed excluded) keys the run directory.
struct Config {
  EmbeddingConfig embedding;
  AlignOptions align;
  FlowConfig flow;
  GnnRunConfig gnn;
  TrainConfig train;
  SplitSpec split;
  InterveneConfig intervene;
  RuntimeConfig runtime;

  void validate() const;

  /// All seed fields set to `seed` (split + training share the run seed).
  void set_seed(std::uint64_t seed);

  std::string to_json(int indent = 2) const;
  static Config from_json(const std::string& text);
  static Config from_json_file(const std::string& path);

  /// FNV-1a hash of the canonical dump with seeds zeroed; identifies
  /// artifacts that are shareable across seeds.
  std::string hash() const;
};

}  // namespace groundcheck
