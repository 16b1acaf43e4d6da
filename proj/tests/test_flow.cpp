#include <doctest.h>

#include <cmath>

#include "groundcheck/flow.hpp"
#include "helpers.hpp"

using namespace groundcheck;

TEST_CASE("single path bottleneck") {
  FlowNetwork net;
  net.node_count = 3;
  net.source = 0;
  net.sink = 2;
  net.arcs = {{0, 1, 1.0}, {1, 2, 1.0}};
  CHECK(max_flow(net).total_flow == doctest::Approx(1.0));
  net.arcs[0].capacity = 0.6;
  CHECK(max_flow(net).total_flow == doctest::Approx(0.6));
}

TEST_CASE("parallel paths add") {
  FlowNetwork net;
  net.node_count = 4;
  net.source = 0;
  net.sink = 3;
  net.arcs = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}};
  CHECK(max_flow(net).total_flow == doctest::Approx(2.0));
}

TEST_CASE("augmentation can reroute through reverse arcs") {
  // Classic cross network where a greedy first path must be partially
  // undone to reach the optimum.
  FlowNetwork net;
  net.node_count = 4;
  net.source = 0;
  net.sink = 3;
  net.arcs = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}};
  CHECK(max_flow(net).total_flow == doctest::Approx(2.0));
}

TEST_CASE("random networks match exhaustive min cut") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const FlowNetwork net = testutil::random_network(rng);
    const FlowAssignment assignment = max_flow(net);
    const double cut = testutil::brute_force_min_cut(net);
    REQUIRE(std::abs(assignment.total_flow - cut) <= 1e-6);

    // Feasibility: capacity bounds and conservation.
    std::vector<double> net_out(static_cast<std::size_t>(net.node_count), 0.0);
    for (std::size_t i = 0; i < net.arcs.size(); ++i) {
      REQUIRE(assignment.arc_flow[i] >= -1e-12);
      REQUIRE(assignment.arc_flow[i] <= net.arcs[i].capacity + 1e-9);
      net_out[static_cast<std::size_t>(net.arcs[i].from)] += assignment.arc_flow[i];
      net_out[static_cast<std::size_t>(net.arcs[i].to)] -= assignment.arc_flow[i];
    }
    for (int v = 0; v < net.node_count; ++v) {
      if (v == net.source || v == net.sink) continue;
      REQUIRE(std::abs(net_out[static_cast<std::size_t>(v)]) <= 1e-9);
    }
    REQUIRE(net_out[static_cast<std::size_t>(net.source)] ==
            doctest::Approx(assignment.total_flow));
  }
}

TEST_CASE("solver is deterministic") {
  Rng rng(77);
  const FlowNetwork net = testutil::random_network(rng);
  const FlowAssignment a = max_flow(net);
  const FlowAssignment b = max_flow(net);
  CHECK(a.total_flow == b.total_flow);
  CHECK(a.arc_flow == b.arc_flow);
}

namespace {

AlignedGraph two_sentence_pair() {
  const auto ref_amr = penman::parse("(w / want-01 :ARG0 (b / boy) :ARG1 (k / book))",
                                     "the boy wants the book");
  const auto resp_amr = penman::parse("(s / see-01 :ARG0 (g / girl))", "the girl sees");
  DocumentGraph ref = build_document_graph({ref_amr}, ComponentId::Reference);
  DocumentGraph resp = build_document_graph({resp_amr}, ComponentId::Response);
  std::vector<AlignmentEdge> edges;
  edges.push_back({2, 2, 0.9, std::nullopt});  // want-01 <-> see-01
  edges.push_back({3, 3, 0.6, std::nullopt});  // boy <-> girl
  return merge_aligned_graph(std::move(ref), std::move(resp), std::move(edges));
}

}  // namespace

TEST_CASE("flow network construction") {
  const AlignedGraph g = two_sentence_pair();
  SUBCASE("no alignment edges means zero flow") {
    AlignedGraph empty = g;
    empty.alignment_edges.clear();
    const FlowNetwork net = build_flow_network(empty, FlowOrientation::RespToRef);
    CHECK(max_flow(net).total_flow == 0.0);
  }
  SUBCASE("alignment arcs carry capacities and the terminal arcs dominate") {
    const FlowNetwork net = build_flow_network(g, FlowOrientation::RespToRef);
    REQUIRE(net.alignment_arc_index.size() == 2);
    const FlowArc& arc = net.arcs[static_cast<std::size_t>(net.alignment_arc_index[0])];
    CHECK(arc.capacity == doctest::Approx(0.9));
    // source arc capacity = sum of alignment capacities + 1
    CHECK(net.arcs[0].capacity == doctest::Approx(0.9 + 0.6 + 1.0));
    CHECK(net.arcs[0].from == net.source);
  }
  SUBCASE("orientations produce mirrored totals") {
    const FlowNetwork fwd = build_flow_network(g, FlowOrientation::RespToRef);
    const FlowNetwork rev = build_flow_network(g, FlowOrientation::RefToResp);
    CHECK(max_flow(fwd).total_flow == doctest::Approx(max_flow(rev).total_flow));
    // Alignment arcs are reversed between the orientations.
    const FlowArc& a = fwd.arcs[static_cast<std::size_t>(fwd.alignment_arc_index[0])];
    const FlowArc& b = rev.arcs[static_cast<std::size_t>(rev.alignment_arc_index[0])];
    CHECK(a.from == b.to);
    CHECK(a.to == b.from);
  }
  SUBCASE("constant intra capacities are honored") {
    IntraCapacityOptions intra;
    intra.mode = IntraCapacityOptions::Mode::Constant;
    intra.constant = 0.25;
    const FlowNetwork net = build_flow_network(g, FlowOrientation::RespToRef, intra);
    // First response intra arc (doc -> sentence) uses the constant.
    CHECK(net.arcs[1].capacity == doctest::Approx(0.25));
  }
  SUBCASE("leaf counts bound intra arcs") {
    const FlowNetwork net = build_flow_network(g, FlowOrientation::RespToRef);
    // Response doc -> sentence arc: the response sentence subtree has one
    // leaf concept (girl), so the arc carries 1.
    CHECK(net.arcs[1].capacity == doctest::Approx(1.0));
  }
}

TEST_CASE("annotate writes flows back") {
  AlignedGraph g = two_sentence_pair();
  const FlowNetwork net = build_flow_network(g, FlowOrientation::RespToRef);
  const FlowAssignment assignment = max_flow(net);
  const AlignedGraph annotated = annotate_flows(g, net, assignment);
  REQUIRE(annotated.alignment_edges.size() == 2);
  for (std::size_t k = 0; k < annotated.alignment_edges.size(); ++k) {
    const AlignmentEdge& edge = annotated.alignment_edges[k];
    REQUIRE(edge.flow.has_value());
    CHECK(*edge.flow >= 0.0);
    CHECK(*edge.flow <= edge.capacity);
    CHECK(edge.capacity == g.alignment_edges[k].capacity);
  }
  SUBCASE("intra edges untouched") {
    CHECK(annotated.reference.edges.size() == g.reference.edges.size());
    CHECK(annotated.response.edges.size() == g.response.edges.size());
  }
  SUBCASE("round trip through JSON keeps flows") {
    const AlignedGraph again = aligned_graph_from_json(aligned_graph_to_json(annotated));
    for (std::size_t k = 0; k < again.alignment_edges.size(); ++k) {
      CHECK(*again.alignment_edges[k].flow == *annotated.alignment_edges[k].flow);
    }
  }
  SUBCASE("mismatched network is rejected") {
    AlignedGraph other = two_sentence_pair();
    other.alignment_edges.pop_back();
    const FlowNetwork other_net = build_flow_network(other, FlowOrientation::RespToRef);
    CHECK_THROWS(annotate_flows(g, other_net, max_flow(other_net)));
  }
}

TEST_CASE("saturated single-edge graph") {
  const auto ref_amr = penman::parse("(b / boy)", "a boy");
  const auto resp_amr = penman::parse("(b / boy)", "a boy");
  AlignedGraph g = merge_aligned_graph(build_document_graph({ref_amr}, ComponentId::Reference),
                                       build_document_graph({resp_amr}, ComponentId::Response),
                                       {{2, 2, 0.6, std::nullopt}});
  const FlowNetwork net = build_flow_network(g, FlowOrientation::RespToRef);
  const FlowAssignment assignment = max_flow(net);
  CHECK(assignment.total_flow == doctest::Approx(0.6));
  const AlignedGraph annotated = annotate_flows(g, net, assignment);
  CHECK(*annotated.alignment_edges[0].flow == doctest::Approx(0.6));  // saturated
}
