#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/penman.hpp"

namespace groundcheck {

enum class NodeKind { Document, Sentence, Concept, Attribute };
enum class ComponentId { Reference, Response };

std::string_view to_string(NodeKind kind);
std::string_view to_string(ComponentId component);
NodeKind node_kind_from_string(std::string_view s);
ComponentId component_from_string(std::string_view s);

/// True when the label follows the PropBank frame convention: a lowercase
/// stem (hyphens allowed) followed by '-' and exactly two digits, e.g.
/// "want-01", "look-up-05".
bool is_propbank_predicate(std::string_view label);

struct GraphNode {
  int id = 0;
  NodeKind kind = NodeKind::Concept;
  ComponentId component = ComponentId::Reference;
  std::string label;
  bool is_verb = false;
  std::optional<int> sentence_index;
  std::optional<std::vector<int>> token_alignments;
  std::optional<std::string> amr_variable;  // concepts only; drives the
                                            // shared-variable capacity rule
};

struct GraphEdge {
  int source = 0;
  int target = 0;
  std::string role;
};

/// One text's AMR forest: a document root over sentence nodes over each
/// sentence's concept/attribute graph. Node ids are dense and assigned in
/// deterministic order (document, then per sentence: the sentence node
/// followed by its concepts/attributes in pre-order).
struct DocumentGraph {
  ComponentId component = ComponentId::Reference;
  std::vector<GraphNode> nodes;  // nodes[i].id == i
  std::vector<GraphEdge> edges;
  int root = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  const GraphNode& node(int id) const;

  std::vector<std::vector<int>> out_adjacency() const;
  std::vector<std::vector<int>> undirected_adjacency() const;

  /// Sentence node id that a concept/attribute node belongs to; -1 for the
  /// document node, the node's own id for sentence nodes.
  std::vector<int> sentence_node_of() const;

  void validate() const;
};

DocumentGraph build_document_graph(const std::vector<penman::AmrSentenceGraph>& sentences,
                                   ComponentId component);

/// All nodes reachable from node_id via directed edges, excluding node_id.
std::set<int> descendants(const DocumentGraph& g, int node_id);

struct AlignmentEdge {
  int ref_node = 0;
  int resp_node = 0;
  double capacity = 0.0;
  std::optional<double> flow;
};

/// Two document graphs coupled by cross-text alignment edges. Intra-text
/// edges are untouched by merging; alignment edges are bipartite across the
/// components with capacities in [0,1].
struct AlignedGraph {
  DocumentGraph reference;
  DocumentGraph response;
  std::vector<AlignmentEdge> alignment_edges;

  int total_nodes() const { return reference.node_count() + response.node_count(); }
  /// Global indexing used by flow networks and feature matrices:
  /// reference ids first, then response ids offset by |V_ref|.
  int global_ref(int id) const { return id; }
  int global_resp(int id) const { return reference.node_count() + id; }

  void validate() const;
};

AlignedGraph merge_aligned_graph(DocumentGraph ref, DocumentGraph resp,
                                 std::vector<AlignmentEdge> edges);

inline constexpr int kAlignedGraphFormatVersion = 1;

std::string aligned_graph_to_json(const AlignedGraph& g, int indent = -1);
AlignedGraph aligned_graph_from_json(const std::string& text);

}  // namespace groundcheck
