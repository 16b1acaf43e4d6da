#include "groundcheck/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>

namespace groundcheck {

std::string_view to_string(FlowOrientation orientation) {
  return orientation == FlowOrientation::RefToResp ? "ref_to_resp" : "resp_to_ref";
}

FlowOrientation flow_orientation_from_string(std::string_view s) {
  if (s == "ref_to_resp") return FlowOrientation::RefToResp;
  if (s == "resp_to_ref") return FlowOrientation::RespToRef;
  throw std::invalid_argument("unknown flow orientation '" + std::string(s) + "'");
}

namespace {

// Leaves under each node, counting the node itself when it has no outgoing
// intra-text edges. Keeps leaf-adjacent arcs from being zero-capacity.
std::vector<double> leaf_counts(const DocumentGraph& g) {
  const auto adj = g.out_adjacency();
  std::vector<double> counts(g.nodes.size(), 0.0);
  for (const auto& node : g.nodes) {
    const std::size_t id = static_cast<std::size_t>(node.id);
    if (adj[id].empty()) {
      counts[id] = 1.0;
      continue;
    }
    double leaves = 0.0;
    for (const int d : descendants(g, node.id)) {
      if (adj[static_cast<std::size_t>(d)].empty()) leaves += 1.0;
    }
    counts[id] = std::max(1.0, leaves);
  }
  return counts;
}

}  // namespace

FlowNetwork build_flow_network(const AlignedGraph& g, FlowOrientation orientation,
                               const IntraCapacityOptions& intra) {
  g.validate();
  const int n_ref = g.reference.node_count();
  const int n_resp = g.response.node_count();

  FlowNetwork net;
  net.node_count = n_ref + n_resp + 2;
  net.source = n_ref + n_resp;
  net.sink = n_ref + n_resp + 1;

  double alignment_total = 0.0;
  for (const auto& edge : g.alignment_edges) alignment_total += edge.capacity;
  const double terminal_capacity = alignment_total + 1.0;

  const bool resp_is_source = orientation == FlowOrientation::RespToRef;

  auto intra_capacity = [&](const DocumentGraph& doc, const std::vector<double>& leaves,
                            int leafward_node) {
    if (intra.mode == IntraCapacityOptions::Mode::Constant) return intra.constant;
    (void)doc;
    return leaves[static_cast<std::size_t>(leafward_node)];
  };

  const auto ref_leaves = leaf_counts(g.reference);
  const auto resp_leaves = leaf_counts(g.response);

  // Source side: arcs run rootward -> leafward (as stored); sink side is
  // reversed so flow climbs back to the sink component's root.
  const DocumentGraph& source_doc = resp_is_source ? g.response : g.reference;
  const DocumentGraph& sink_doc = resp_is_source ? g.reference : g.response;
  const auto& source_leaves = resp_is_source ? resp_leaves : ref_leaves;
  const auto& sink_leaves = resp_is_source ? ref_leaves : resp_leaves;
  auto global_source_id = [&](int id) {
    return resp_is_source ? g.global_resp(id) : g.global_ref(id);
  };
  auto global_sink_id = [&](int id) {
    return resp_is_source ? g.global_ref(id) : g.global_resp(id);
  };

  net.arcs.push_back({net.source, global_source_id(source_doc.root), terminal_capacity});
  for (const auto& edge : source_doc.edges) {
    net.arcs.push_back({global_source_id(edge.source), global_source_id(edge.target),
                        intra_capacity(source_doc, source_leaves, edge.target)});
  }
  net.alignment_arc_index.reserve(g.alignment_edges.size());
  for (const auto& edge : g.alignment_edges) {
    const int from = resp_is_source ? g.global_resp(edge.resp_node) : g.global_ref(edge.ref_node);
    const int to = resp_is_source ? g.global_ref(edge.ref_node) : g.global_resp(edge.resp_node);
    net.alignment_arc_index.push_back(static_cast<int>(net.arcs.size()));
    net.arcs.push_back({from, to, edge.capacity});
  }
  for (const auto& edge : sink_doc.edges) {
    net.arcs.push_back({global_sink_id(edge.target), global_sink_id(edge.source),
                        intra_capacity(sink_doc, sink_leaves, edge.target)});
  }
  net.arcs.push_back({global_sink_id(sink_doc.root), net.sink, terminal_capacity});
  return net;
}

FlowAssignment max_flow(const FlowNetwork& net) {
  constexpr double kResolution = 1e9;
  const std::size_t arc_count = net.arcs.size();

  // Residual graph: slot 2i is arc i, slot 2i+1 its reverse.
  std::vector<std::int64_t> residual(arc_count * 2, 0);
  std::vector<std::vector<std::int32_t>> adjacency(static_cast<std::size_t>(net.node_count));
  for (std::size_t i = 0; i < arc_count; ++i) {
    const FlowArc& arc = net.arcs[i];
    if (arc.capacity < 0.0 || !std::isfinite(arc.capacity)) {
      throw std::invalid_argument("arc capacity must be finite and >= 0");
    }
    if (arc.from == net.sink || arc.to == net.source) {
      throw std::invalid_argument("no arc may leave the sink or enter the source");
    }
    residual[i * 2] = static_cast<std::int64_t>(std::llround(arc.capacity * kResolution));
    adjacency[static_cast<std::size_t>(arc.from)].push_back(static_cast<std::int32_t>(i * 2));
    adjacency[static_cast<std::size_t>(arc.to)].push_back(static_cast<std::int32_t>(i * 2 + 1));
  }

  auto head = [&](std::int32_t slot) {
    const FlowArc& arc = net.arcs[static_cast<std::size_t>(slot / 2)];
    return (slot % 2 == 0) ? arc.to : arc.from;
  };

  std::vector<std::int32_t> parent_slot(static_cast<std::size_t>(net.node_count), -1);
  std::vector<int> visited(static_cast<std::size_t>(net.node_count), 0);
  int stamp = 0;
  std::int64_t total = 0;

  for (;;) {
    ++stamp;
    std::queue<int> frontier;
    frontier.push(net.source);
    visited[static_cast<std::size_t>(net.source)] = stamp;
    bool reached = false;
    while (!frontier.empty() && !reached) {
      const int u = frontier.front();
      frontier.pop();
      for (const std::int32_t slot : adjacency[static_cast<std::size_t>(u)]) {
        if (residual[static_cast<std::size_t>(slot)] <= 0) continue;
        const int v = head(slot);
        if (visited[static_cast<std::size_t>(v)] == stamp) continue;
        visited[static_cast<std::size_t>(v)] = stamp;
        parent_slot[static_cast<std::size_t>(v)] = slot;
        if (v == net.sink) {
          reached = true;
          break;
        }
        frontier.push(v);
      }
    }
    if (!reached) break;

    std::int64_t bottleneck = std::numeric_limits<std::int64_t>::max();
    for (int v = net.sink; v != net.source;) {
      const std::int32_t slot = parent_slot[static_cast<std::size_t>(v)];
      bottleneck = std::min(bottleneck, residual[static_cast<std::size_t>(slot)]);
      v = (slot % 2 == 0) ? net.arcs[static_cast<std::size_t>(slot / 2)].from
                          : net.arcs[static_cast<std::size_t>(slot / 2)].to;
    }
    for (int v = net.sink; v != net.source;) {
      const std::int32_t slot = parent_slot[static_cast<std::size_t>(v)];
      residual[static_cast<std::size_t>(slot)] -= bottleneck;
      residual[static_cast<std::size_t>(slot ^ 1)] += bottleneck;
      v = (slot % 2 == 0) ? net.arcs[static_cast<std::size_t>(slot / 2)].from
                          : net.arcs[static_cast<std::size_t>(slot / 2)].to;
    }
    total += bottleneck;
  }

  FlowAssignment result;
  result.arc_flow.resize(arc_count);
  for (std::size_t i = 0; i < arc_count; ++i) {
    const std::int64_t cap =
        static_cast<std::int64_t>(std::llround(net.arcs[i].capacity * kResolution));
    result.arc_flow[i] = static_cast<double>(cap - residual[i * 2]) / kResolution;
  }
  result.total_flow = static_cast<double>(total) / kResolution;
  return result;
}

AlignedGraph annotate_flows(AlignedGraph g, const FlowNetwork& net,
                            const FlowAssignment& assignment) {
  if (assignment.arc_flow.size() != net.arcs.size()) {
    throw std::invalid_argument("flow assignment does not match the network");
  }
  if (net.alignment_arc_index.size() != g.alignment_edges.size()) {
    throw std::invalid_argument("network was not built from this aligned graph");
  }
  for (std::size_t k = 0; k < g.alignment_edges.size(); ++k) {
    const int arc_index = net.alignment_arc_index[k];
    const FlowArc& arc = net.arcs[static_cast<std::size_t>(arc_index)];
    AlignmentEdge& edge = g.alignment_edges[k];
    const int ref_global = g.global_ref(edge.ref_node);
    const int resp_global = g.global_resp(edge.resp_node);
    const bool matches = (arc.from == ref_global && arc.to == resp_global) ||
                         (arc.from == resp_global && arc.to == ref_global);
    if (!matches || std::abs(arc.capacity - edge.capacity) > 1e-12) {
      throw std::invalid_argument("network arcs do not match the graph's alignment edges");
    }
    edge.flow = std::min(assignment.arc_flow[static_cast<std::size_t>(arc_index)],
                         edge.capacity);
  }
  return g;
}

}  // namespace groundcheck
