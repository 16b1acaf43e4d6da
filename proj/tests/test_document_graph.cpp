#include <doctest.h>

#include "groundcheck/document_graph.hpp"
#include "helpers.hpp"

using namespace groundcheck;

namespace {

DocumentGraph graph_of(const std::vector<std::string>& penman_texts, ComponentId component) {
  std::vector<penman::AmrSentenceGraph> sentences;
  for (const auto& text : penman_texts) {
    sentences.push_back(penman::parse(text, "sentence text"));
  }
  return build_document_graph(sentences, component);
}

}  // namespace

TEST_CASE("propbank predicate detection") {
  CHECK(is_propbank_predicate("want-01"));
  CHECK(is_propbank_predicate("go-02"));
  CHECK(is_propbank_predicate("look-up-05"));
  CHECK_FALSE(is_propbank_predicate("boy"));
  CHECK_FALSE(is_propbank_predicate("name"));
  CHECK_FALSE(is_propbank_predicate("want-1"));
  CHECK_FALSE(is_propbank_predicate("want-012"));
  CHECK_FALSE(is_propbank_predicate("Want-01"));
  CHECK_FALSE(is_propbank_predicate("-01"));
}

TEST_CASE("minimal composition") {
  const DocumentGraph g = graph_of({"(b / boy)"}, ComponentId::Reference);
  REQUIRE(g.node_count() == 3);
  CHECK(g.node(0).kind == NodeKind::Document);
  CHECK(g.node(1).kind == NodeKind::Sentence);
  CHECK(g.node(2).kind == NodeKind::Concept);
  CHECK(g.node(2).label == "boy");
  CHECK(g.node(2).amr_variable == "b");
  CHECK(g.root == 0);
}

TEST_CASE("two sentences keep order") {
  const DocumentGraph g = graph_of({"(b / boy)", "(c / cat)"}, ComponentId::Response);
  std::vector<int> sentence_ids;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Sentence) sentence_ids.push_back(*n.sentence_index);
  }
  CHECK(sentence_ids == std::vector<int>{0, 1});
  int doc_children = 0;
  for (const auto& e : g.edges) {
    if (e.source == g.root) {
      ++doc_children;
      CHECK(g.node(e.target).kind == NodeKind::Sentence);
    }
  }
  CHECK(doc_children == 2);
}

TEST_CASE("attribute nodes carry the literal surface") {
  const DocumentGraph g =
      graph_of({"(c / city :name (n / name :op1 \"Rome\"))"}, ComponentId::Reference);
  const GraphNode* rome = nullptr;
  const GraphNode* name = nullptr;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Attribute) rome = &n;
    if (n.label == "name") name = &n;
  }
  REQUIRE(rome != nullptr);
  REQUIRE(name != nullptr);
  CHECK(rome->label == "Rome");
  bool edge_found = false;
  for (const auto& e : g.edges) {
    if (e.source == name->id && e.target == rome->id && e.role == ":op1") edge_found = true;
  }
  CHECK(edge_found);
}

TEST_CASE("empty sentence list rejected") {
  CHECK_THROWS_AS(build_document_graph({}, ComponentId::Reference), std::invalid_argument);
}

TEST_CASE("node ids are deterministic") {
  const DocumentGraph a = graph_of({"(w / want-01 :ARG0 (b / boy))"}, ComponentId::Reference);
  const DocumentGraph b = graph_of({"(w / want-01 :ARG0 (b / boy))"}, ComponentId::Reference);
  REQUIRE(a.node_count() == b.node_count());
  for (int i = 0; i < a.node_count(); ++i) {
    CHECK(a.node(i).label == b.node(i).label);
    CHECK(a.node(i).kind == b.node(i).kind);
  }
}

TEST_CASE("descendants") {
  const DocumentGraph g = graph_of(
      {"(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))"}, ComponentId::Reference);
  int w_id = -1, b_id = -1, g_id = -1;
  for (const auto& n : g.nodes) {
    if (n.amr_variable == "w") w_id = n.id;
    if (n.amr_variable == "b") b_id = n.id;
    if (n.amr_variable == "g") g_id = n.id;
  }
  SUBCASE("leaf has no descendants") { CHECK(descendants(g, b_id).empty()); }
  SUBCASE("root reaches everything") {
    CHECK(descendants(g, g.root).size() == static_cast<std::size_t>(g.node_count() - 1));
  }
  SUBCASE("reentrant node is a descendant of both parents") {
    CHECK(descendants(g, w_id).count(b_id));
    CHECK(descendants(g, g_id).count(b_id));
  }
  SUBCASE("unknown id fails") { CHECK_THROWS(descendants(g, 999)); }
}

TEST_CASE("merge validates alignment edges") {
  DocumentGraph ref = graph_of({"(b / boy)"}, ComponentId::Reference);
  DocumentGraph resp = graph_of({"(b / boy)"}, ComponentId::Response);

  SUBCASE("zero edges") {
    const AlignedGraph g = merge_aligned_graph(ref, resp, {});
    CHECK(g.alignment_edges.empty());
    CHECK(g.total_nodes() == 6);
  }
  SUBCASE("one full-capacity edge") {
    const AlignedGraph g = merge_aligned_graph(ref, resp, {{2, 2, 1.0, std::nullopt}});
    CHECK(g.alignment_edges.size() == 1);
  }
  SUBCASE("capacity above one rejected") {
    CHECK_THROWS(merge_aligned_graph(ref, resp, {{2, 2, 1.2, std::nullopt}}));
  }
  SUBCASE("same-component merge rejected") {
    DocumentGraph ref2 = graph_of({"(c / cat)"}, ComponentId::Reference);
    CHECK_THROWS(merge_aligned_graph(ref, ref2, {}));
  }
  SUBCASE("flow above capacity rejected") {
    CHECK_THROWS(merge_aligned_graph(ref, resp, {{2, 2, 0.5, 0.7}}));
  }
  SUBCASE("intra edges unchanged by merge") {
    const auto ref_edges = ref.edges;
    const auto resp_edges = resp.edges;
    const AlignedGraph g = merge_aligned_graph(ref, resp, {{2, 2, 0.9, std::nullopt}});
    CHECK(g.reference.edges.size() == ref_edges.size());
    for (std::size_t i = 0; i < ref_edges.size(); ++i) {
      CHECK(g.reference.edges[i].source == ref_edges[i].source);
      CHECK(g.reference.edges[i].target == ref_edges[i].target);
      CHECK(g.reference.edges[i].role == ref_edges[i].role);
    }
    CHECK(g.response.edges.size() == resp_edges.size());
  }
}

TEST_CASE("aligned graph JSON round trip") {
  DocumentGraph ref =
      graph_of({"(w / want-01 :ARG0 (b / boy) :polarity -)"}, ComponentId::Reference);
  DocumentGraph resp = graph_of({"(b / boy)"}, ComponentId::Response);
  AlignedGraph g = merge_aligned_graph(ref, resp, {{2, 2, 0.75, 0.5}});
  const std::string text = aligned_graph_to_json(g);
  const AlignedGraph again = aligned_graph_from_json(text);
  CHECK(aligned_graph_to_json(again) == text);
  CHECK(again.alignment_edges.size() == 1);
  CHECK(again.alignment_edges[0].capacity == doctest::Approx(0.75));
  REQUIRE(again.alignment_edges[0].flow.has_value());
  CHECK(*again.alignment_edges[0].flow == doctest::Approx(0.5));
  CHECK(again.reference.node(2).amr_variable == "w");
  CHECK(again.reference.node(3).amr_variable == "b");
}
