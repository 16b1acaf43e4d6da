#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/document_graph.hpp"
#include "groundcheck/flow.hpp"
#include "groundcheck/metrics.hpp"
#include "groundcheck/train.hpp"

namespace groundcheck {

enum class InterventionKind { Remove, Rewire };
enum class InterventionSetting { Perturbation, Ablation };

std::string_view to_string(InterventionKind kind);
InterventionKind intervention_kind_from_string(std::string_view s);

struct InterventionSpec {
  InterventionKind kind = InterventionKind::Remove;
  double fraction = 0.0;  // in [0,1]
  std::uint64_t seed = 0;
  InterventionSetting setting = InterventionSetting::Perturbation;
};

/// round(fraction * edges) with round-half-to-even, pinned here so sweeps
/// are reproducible across platforms.
std::size_t intervention_count(double fraction, std::size_t edge_count);

/// Deletes exactly intervention_count(fraction, |E_a|) alignment edges,
/// chosen uniformly under the seed. Intra-text structure is untouched.
AlignedGraph remove_edges(const AlignedGraph& g, double fraction, std::uint64_t seed);

struct RewireResult {
  AlignedGraph graph;
  int unrewirable = 0;  // selected edges with no alternative target
};

/// Reassigns the response endpoint of the selected edges uniformly among
/// kind-compatible response nodes, rejecting duplicate edges. Keeps each
/// edge's reference endpoint, capacity, and flow; |E_a| is preserved.
RewireResult rewire_edges(const AlignedGraph& g, double fraction, std::uint64_t seed);

/// How flows are treated after an intervention edits the topology.
enum class FlowRefresh { Keep, Resolve };

struct SweepOptions {
  FlowOrientation orientation = FlowOrientation::RespToRef;
  IntraCapacityOptions intra_capacity{};
  EdgeWeighting edge_weighting = EdgeWeighting::Flow;
  FlowRefresh flow_refresh = FlowRefresh::Resolve;
  double threshold = 0.5;
};

struct SweepCell {
  InterventionKind kind = InterventionKind::Remove;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  EvalReport report;
  int unrewirable = 0;
};

struct SweepTable {
  std::vector<SweepCell> cells;
};

/// Test-time corruption: for every (kind, fraction, seed) cell, intervene on
/// each test graph, rebuild the adjacency (optionally re-solving flow), and
/// evaluate the fixed model. Per-graph RNG streams derive from
/// (seed, kind, fraction, graph index), so ordering cannot change results.
SweepTable perturbation_sweep(const GnnModel& model,
                              const std::vector<GraphInstance>& test_set,
                              const std::vector<double>& fractions,
                              const std::vector<InterventionKind>& kinds,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& options = {});

struct AblationCell {
  SweepCell cell;
  TrainHistory history;
};

struct AblationTable {
  std::vector<AblationCell> cells;
};

/// Controlled reconstruction: interventions are applied to the train,
/// validation, and test graphs, then a fresh model is trained per cell.
AblationTable ablation_sweep(const std::vector<GraphInstance>& train_set,
                             const std::vector<GraphInstance>& val_set,
                             const std::vector<GraphInstance>& test_set,
                             const TrainConfig& train_config,
                             const std::vector<double>& fractions,
                             const std::vector<InterventionKind>& kinds,
                             const std::vector<std::uint64_t>& seeds,
                             const SweepOptions& options = {});

/// Rebuilds one instance's adjacency after interventions (re-solving flow
/// when requested). Features are embedding-derived and do not change.
GraphInstance refresh_instance(const GraphInstance& instance, AlignedGraph intervened,
                               const SweepOptions& options);

/// CSV with header kind,fraction,seed,precision,recall,f1,macro_f1,accuracy;
/// one row per cell plus mean/stdev rows per (kind, fraction) with "mean" or
/// "stdev" in the seed column.
std::string sweep_to_csv(const SweepTable& table);

}  // namespace groundcheck
