#include "groundcheck/intervene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "groundcheck/rng.hpp"

namespace groundcheck {

std::string_view to_string(InterventionKind kind) {
  return kind == InterventionKind::Remove ? "remove" : "rewire";
}

InterventionKind intervention_kind_from_string(std::string_view s) {
  if (s == "remove") return InterventionKind::Remove;
  if (s == "rewire") return InterventionKind::Rewire;
  throw std::invalid_argument("unknown intervention kind '" + std::string(s) + "'");
}

std::size_t intervention_count(double fraction, std::size_t edge_count) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("fraction must lie in [0,1]");
  }
  const double exact = fraction * static_cast<double>(edge_count);
  const double floor = std::floor(exact);
  const double frac = exact - floor;
  double rounded;
  if (frac > 0.5) {
    rounded = floor + 1.0;
  } else if (frac < 0.5) {
    rounded = floor;
  } else {  // ties to even
    rounded = (std::fmod(floor, 2.0) == 0.0) ? floor : floor + 1.0;
  }
  return static_cast<std::size_t>(rounded);
}

namespace {

// Deterministic choice of k distinct edge indices under the seed.
std::vector<std::size_t> pick_edges(std::size_t edge_count, std::size_t k,
                                    std::uint64_t seed) {
  std::vector<std::size_t> indices(edge_count);
  for (std::size_t i = 0; i < edge_count; ++i) indices[i] = i;
  Rng rng(seed);
  rng.shuffle(indices);
  indices.resize(k);
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace

AlignedGraph remove_edges(const AlignedGraph& g, double fraction, std::uint64_t seed) {
  const std::size_t k = intervention_count(fraction, g.alignment_edges.size());
  AlignedGraph result = g;
  if (k == 0) return result;
  const auto doomed = pick_edges(g.alignment_edges.size(), k, seed);
  std::vector<AlignmentEdge> kept;
  kept.reserve(g.alignment_edges.size() - k);
  std::size_t next_doomed = 0;
  for (std::size_t i = 0; i < g.alignment_edges.size(); ++i) {
    if (next_doomed < doomed.size() && doomed[next_doomed] == i) {
      ++next_doomed;
      continue;
    }
    kept.push_back(g.alignment_edges[i]);
  }
  result.alignment_edges = std::move(kept);
  return result;
}

RewireResult rewire_edges(const AlignedGraph& g, double fraction, std::uint64_t seed) {
  const std::size_t k = intervention_count(fraction, g.alignment_edges.size());
  RewireResult result{g, 0};
  if (k == 0) return result;

  std::map<NodeKind, std::vector<int>> targets_by_kind;
  for (const auto& node : g.response.nodes) {
    targets_by_kind[node.kind].push_back(node.id);
  }
  std::set<std::pair<int, int>> existing;
  for (const auto& edge : result.graph.alignment_edges) {
    existing.insert({edge.ref_node, edge.resp_node});
  }

  Rng rng(seed);
  const auto selected = pick_edges(g.alignment_edges.size(), k, seed);
  for (const std::size_t index : selected) {
    AlignmentEdge& edge = result.graph.alignment_edges[index];
    const NodeKind kind = g.response.node(edge.resp_node).kind;
    const auto& pool = targets_by_kind[kind];
    // Candidates: kind-compatible response nodes that do not duplicate
    // another existing edge. The current endpoint is always allowed.
    std::vector<int> candidates;
    for (const int target : pool) {
      if (target == edge.resp_node || !existing.count({edge.ref_node, target})) {
        candidates.push_back(target);
      }
    }
    if (candidates.size() <= 1) {
      ++result.unrewirable;
      continue;
    }
    const int chosen =
        candidates[static_cast<std::size_t>(rng.bounded(candidates.size()))];
    if (chosen == edge.resp_node) continue;
    existing.erase({edge.ref_node, edge.resp_node});
    existing.insert({edge.ref_node, chosen});
    edge.resp_node = chosen;
  }
  return result;
}

GraphInstance refresh_instance(const GraphInstance& instance, AlignedGraph intervened,
                               const SweepOptions& options) {
  if (options.flow_refresh == FlowRefresh::Resolve && !intervened.alignment_edges.empty()) {
    const FlowNetwork net =
        build_flow_network(intervened, options.orientation, options.intra_capacity);
    const FlowAssignment assignment = max_flow(net);
    intervened = annotate_flows(std::move(intervened), net, assignment);
  }
  GraphInstance refreshed;
  refreshed.id = instance.id;
  refreshed.label = instance.label;
  refreshed.features = instance.features;
  refreshed.adjacency = normalize_adjacency(intervened, options.edge_weighting);
  refreshed.graph = std::move(intervened);
  return refreshed;
}

namespace {

std::uint64_t cell_seed(std::uint64_t base, InterventionKind kind, double fraction,
                        std::uint64_t index) {
  std::uint64_t h = Rng::mix(base, kind == InterventionKind::Remove ? 1 : 2);
  std::uint64_t fraction_bits;
  static_assert(sizeof(fraction_bits) == sizeof(fraction));
  std::memcpy(&fraction_bits, &fraction, sizeof(fraction));
  h = Rng::mix(h, fraction_bits);
  return Rng::mix(h, index);
}

struct IntervenedSet {
  std::vector<GraphInstance> instances;
  int unrewirable = 0;
};

IntervenedSet intervene_set(const std::vector<GraphInstance>& instances,
                            InterventionKind kind, double fraction, std::uint64_t seed,
                            const SweepOptions& options) {
  IntervenedSet result;
  result.instances.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::uint64_t graph_seed = cell_seed(seed, kind, fraction, i);
    if (fraction == 0.0) {
      result.instances.push_back(instances[i]);  // identity, bit for bit
      continue;
    }
    if (kind == InterventionKind::Remove) {
      AlignedGraph intervened = remove_edges(instances[i].graph, fraction, graph_seed);
      result.instances.push_back(refresh_instance(instances[i], std::move(intervened), options));
    } else {
      RewireResult rewired = rewire_edges(instances[i].graph, fraction, graph_seed);
      result.unrewirable += rewired.unrewirable;
      result.instances.push_back(
          refresh_instance(instances[i], std::move(rewired.graph), options));
    }
  }
  return result;
}

EvalReport evaluate_instances(const GnnModel& model,
                              const std::vector<GraphInstance>& instances,
                              double threshold) {
  std::vector<double> probabilities;
  std::vector<int> labels;
  probabilities.reserve(instances.size());
  for (const auto& instance : instances) {
    probabilities.push_back(predict(model, instance.features, instance.adjacency));
    labels.push_back(instance.label);
  }
  return evaluate(probabilities, labels, threshold);
}

}  // namespace

SweepTable perturbation_sweep(const GnnModel& model,
                              const std::vector<GraphInstance>& test_set,
                              const std::vector<double>& fractions,
                              const std::vector<InterventionKind>& kinds,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& options) {
  SweepTable table;
  for (const InterventionKind kind : kinds) {
    for (const double fraction : fractions) {
      for (const std::uint64_t seed : seeds) {
        const IntervenedSet intervened =
            intervene_set(test_set, kind, fraction, seed, options);
        SweepCell cell;
        cell.kind = kind;
        cell.fraction = fraction;
        cell.seed = seed;
        cell.unrewirable = intervened.unrewirable;
        cell.report = evaluate_instances(model, intervened.instances, options.threshold);
        table.cells.push_back(std::move(cell));
      }
    }
  }
  return table;
}

AblationTable ablation_sweep(const std::vector<GraphInstance>& train_set,
                             const std::vector<GraphInstance>& val_set,
                             const std::vector<GraphInstance>& test_set,
                             const TrainConfig& train_config,
                             const std::vector<double>& fractions,
                             const std::vector<InterventionKind>& kinds,
                             const std::vector<std::uint64_t>& seeds,
                             const SweepOptions& options) {
  AblationTable table;
  for (const InterventionKind kind : kinds) {
    for (const double fraction : fractions) {
      for (const std::uint64_t seed : seeds) {
        const IntervenedSet train_i = intervene_set(train_set, kind, fraction,
                                                    Rng::mix(seed, 101), options);
        const IntervenedSet val_i =
            intervene_set(val_set, kind, fraction, Rng::mix(seed, 211), options);
        const IntervenedSet test_i =
            intervene_set(test_set, kind, fraction, Rng::mix(seed, 307), options);

        TrainConfig cell_config = train_config;
        cell_config.seed = seed;
        const TrainResult trained = train(train_i.instances, val_i.instances, cell_config);

        AblationCell cell;
        cell.cell.kind = kind;
        cell.cell.fraction = fraction;
        cell.cell.seed = seed;
        cell.cell.unrewirable =
            train_i.unrewirable + val_i.unrewirable + test_i.unrewirable;
        cell.cell.report =
            evaluate_instances(trained.model, test_i.instances, options.threshold);
        cell.history = trained.history;
        table.cells.push_back(std::move(cell));
      }
    }
  }
  return table;
}

namespace {

void append_csv_row(std::ostringstream& out, std::string_view kind, double fraction,
                    const std::string& seed, const EvalReport& r) {
  out << kind << ',' << fraction << ',' << seed << ',' << r.precision << ',' << r.recall
      << ',' << r.f1 << ',' << r.macro_f1 << ',' << r.accuracy << '\n';
}

}  // namespace

std::string sweep_to_csv(const SweepTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "kind,fraction,seed,precision,recall,f1,macro_f1,accuracy\n";
  for (const auto& cell : table.cells) {
    append_csv_row(out, to_string(cell.kind), cell.fraction, std::to_string(cell.seed),
                   cell.report);
  }
  // Aggregate rows per (kind, fraction), in first-seen order.
  std::vector<std::pair<InterventionKind, double>> groups;
  for (const auto& cell : table.cells) {
    const std::pair<InterventionKind, double> key{cell.kind, cell.fraction};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) {
      groups.push_back(key);
    }
  }
  for (const auto& [kind, fraction] : groups) {
    std::vector<EvalReport> reports;
    for (const auto& cell : table.cells) {
      if (cell.kind == kind && cell.fraction == fraction) reports.push_back(cell.report);
    }
    const AggregateReport agg = seed_aggregate(reports);
    out << to_string(kind) << ',' << fraction << ",mean," << agg.precision.mean << ','
        << agg.recall.mean << ',' << agg.f1.mean << ',' << agg.macro_f1.mean << ','
        << agg.accuracy.mean << '\n';
    out << to_string(kind) << ',' << fraction << ",stdev," << agg.precision.stdev << ','
        << agg.recall.stdev << ',' << agg.f1.stdev << ',' << agg.macro_f1.stdev << ','
        << agg.accuracy.stdev << '\n';
  }
  return out.str();
}

}  // namespace groundcheck
