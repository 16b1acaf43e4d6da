#include "groundcheck/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace groundcheck {

namespace {

double safe_div(double numerator, double denominator) {
  return denominator == 0.0 ? 0.0 : numerator / denominator;
}

double f1_from(double precision, double recall) {
  return (precision + recall) == 0.0 ? 0.0
                                     : 2.0 * precision * recall / (precision + recall);
}

MetricStats stats_of(const std::vector<double>& values) {
  MetricStats s;
  const double n = static_cast<double>(values.size());
  for (const double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

}  // namespace

EvalReport evaluate(const std::vector<double>& probabilities,
                    const std::vector<int>& labels, double threshold) {
  if (probabilities.empty()) throw std::invalid_argument("evaluate: empty input");
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("evaluate: predictions and labels differ in length");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("evaluate: threshold must lie in (0,1)");
  }
  EvalReport r;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    else if (predicted && !actual) ++r.fp;
    else if (!predicted && actual) ++r.fn;
    else ++r.tn;
  }
  r.precision = safe_div(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fp));
  r.recall = safe_div(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fn));
  r.f1 = f1_from(r.precision, r.recall);
  const double neg_precision =
      safe_div(static_cast<double>(r.tn), static_cast<double>(r.tn + r.fn));
  const double neg_recall =
      safe_div(static_cast<double>(r.tn), static_cast<double>(r.tn + r.fp));
  r.macro_f1 = 0.5 * (r.f1 + f1_from(neg_precision, neg_recall));
  r.accuracy = safe_div(static_cast<double>(r.tp + r.tn), static_cast<double>(r.total()));
  return r;
}

AggregateReport seed_aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("seed_aggregate: no reports");
  std::vector<double> precision, recall, f1, macro_f1, accuracy;
  for (const auto& r : reports) {
    precision.push_back(r.precision);
    recall.push_back(r.recall);
    f1.push_back(r.f1);
    macro_f1.push_back(r.macro_f1);
    accuracy.push_back(r.accuracy);
  }
  AggregateReport agg;
  agg.precision = stats_of(precision);
  agg.recall = stats_of(recall);
  agg.f1 = stats_of(f1);
  agg.macro_f1 = stats_of(macro_f1);
  agg.accuracy = stats_of(accuracy);
  agg.count = static_cast<int>(reports.size());
  return agg;
}

CosineDistanceStats cosine_distance_by_layer(const GnnModel& model,
                                             const std::vector<GraphInstance>& instances) {
  CosineDistanceStats stats;
  for (const auto& instance : instances) {
    if (instance.graph.alignment_edges.empty()) {
      ++stats.graphs_without_alignment;
      continue;
    }
    const ForwardCache cache =
        gcn_forward(instance.features, instance.adjacency, model, 0.0, false, nullptr);
    const std::array<const Eigen::MatrixXd*, 4> reps = {&instance.features, &cache.h1,
                                                        &cache.h2, &cache.h3};
    const std::size_t label = instance.label == 1 ? 1 : 0;
    for (const auto& edge : instance.graph.alignment_edges) {
      const int u = instance.graph.global_ref(edge.ref_node);
      const int v = instance.graph.global_resp(edge.resp_node);
      for (std::size_t layer = 0; layer < reps.size(); ++layer) {
        const Eigen::VectorXd a = reps[layer]->row(u);
        const Eigen::VectorXd b = reps[layer]->row(v);
        const double na = a.norm(), nb = b.norm();
        if (na == 0.0 || nb == 0.0) {
          ++stats.zero_vector_pairs;
          continue;
        }
        const double distance = 1.0 - a.dot(b) / (na * nb);
        stats.layers[layer][label].values.push_back(distance);
      }
    }
  }
  for (auto& layer : stats.layers) {
    for (auto& bucket : layer) {
      if (bucket.values.empty()) continue;
      double sum = 0.0;
      for (const double v : bucket.values) sum += v;
      bucket.mean = sum / static_cast<double>(bucket.values.size());
      if (bucket.values.size() > 1) {
        double ss = 0.0;
        for (const double v : bucket.values) ss += (v - bucket.mean) * (v - bucket.mean);
        bucket.stdev = std::sqrt(ss / (static_cast<double>(bucket.values.size()) - 1.0));
      }
    }
  }
  return stats;
}

}  // namespace groundcheck
