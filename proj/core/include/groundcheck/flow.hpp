#pragma once

#include <string_view>
#include <vector>

#include "groundcheck/document_graph.hpp"

namespace groundcheck {

/// Which component the source attaches to. RespToRef (default) sends flow
/// from the response document root, across alignment edges, into the
/// reference and out the sink, measuring how much response content the
/// reference absorbs.
enum class FlowOrientation { RefToResp, RespToRef };

std::string_view to_string(FlowOrientation orientation);
FlowOrientation flow_orientation_from_string(std::string_view s);

struct FlowArc {
  int from = 0;
  int to = 0;
  double capacity = 0.0;
};

/// Directed flow network over the aligned graph's global node ids plus a
/// synthetic source and sink. `alignment_arc_index[k]` is the arc carrying
/// alignment edge k, used to write flows back.
struct FlowNetwork {
  int node_count = 0;
  int source = 0;
  int sink = 0;
  std::vector<FlowArc> arcs;
  std::vector<int> alignment_arc_index;
};

struct IntraCapacityOptions {
  enum class Mode { LeafCount, Constant };
  Mode mode = Mode::LeafCount;
  double constant = 1.0;
};

/// Orients intra-text edges so flow runs source component -> alignment
/// edges -> sink component. Source/sink attach to the document roots with a
/// large finite capacity (sum of alignment capacities + 1). Intra-text arcs
/// carry the leaf count under the arc's leaf-ward endpoint (a leaf counts
/// itself), or a constant.
FlowNetwork build_flow_network(const AlignedGraph& g, FlowOrientation orientation,
                               const IntraCapacityOptions& intra = {});

struct FlowAssignment {
  std::vector<double> arc_flow;  // parallel to FlowNetwork::arcs
  double total_flow = 0.0;
};

/// Shortest-augmenting-path max-flow. Capacities are scaled to integers at
/// 1e-9 resolution, which bounds the rounding error well below the 1e-6
/// feasibility tolerance and guarantees termination. Deterministic: arcs are
/// explored in insertion order.
FlowAssignment max_flow(const FlowNetwork& net);

/// Writes each alignment edge's solved flow back onto the graph. Capacities,
/// topology, and intra-text edges are untouched.
AlignedGraph annotate_flows(AlignedGraph g, const FlowNetwork& net,
                            const FlowAssignment& assignment);

}  // namespace groundcheck
