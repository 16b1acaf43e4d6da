#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "groundcheck/document_graph.hpp"
#include "groundcheck/gnn.hpp"

namespace groundcheck {

/// Confusion counts and derived metrics with the hallucinated/unsupported
/// class (label 1) as the positive class. Zero-denominator metrics are 0.
struct EvalReport {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double macro_f1 = 0.0, accuracy = 0.0;

  long total() const { return tp + fp + tn + fn; }
};

/// A prediction counts as positive when p >= threshold.
EvalReport evaluate(const std::vector<double>& probabilities,
                    const std::vector<int>& labels, double threshold = 0.5);

struct MetricStats {
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for a single report
};

struct AggregateReport {
  MetricStats precision, recall, f1, macro_f1, accuracy;
  int count = 0;
};

AggregateReport seed_aggregate(const std::vector<EvalReport>& reports);

/// Input to the per-layer cosine analysis: one classified graph with its
/// assembled features and normalized adjacency.
struct GraphInstance {
  std::string id;
  int label = 0;
  AlignedGraph graph;
  Eigen::MatrixXd features;
  Eigen::MatrixXd adjacency;
};

/// Cosine distances (1 - cos) between alignment-edge endpoints at the input
/// features (layer 0) and after each GCN layer (1..3), bucketed by true
/// label. Pairs with a zero-norm endpoint are skipped and counted.
struct CosineDistanceStats {
  struct Bucket {
    std::vector<double> values;
    double mean = 0.0;
    double stdev = 0.0;
  };
  std::array<std::array<Bucket, 2>, 4> layers;  // [layer][label]
  int graphs_without_alignment = 0;
  int zero_vector_pairs = 0;
};

CosineDistanceStats cosine_distance_by_layer(const GnnModel& model,
                                             const std::vector<GraphInstance>& instances);

}  // namespace groundcheck
