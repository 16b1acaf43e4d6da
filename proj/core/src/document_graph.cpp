#include "groundcheck/document_graph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "json_detail.hpp"

namespace groundcheck {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Document: return "document";
    case NodeKind::Sentence: return "sentence";
    case NodeKind::Concept: return "concept";
    case NodeKind::Attribute: return "attribute";
  }
  return "concept";
}

std::string_view to_string(ComponentId component) {
  return component == ComponentId::Reference ? "reference" : "response";
}

NodeKind node_kind_from_string(std::string_view s) {
  if (s == "document") return NodeKind::Document;
  if (s == "sentence") return NodeKind::Sentence;
  if (s == "concept") return NodeKind::Concept;
  if (s == "attribute") return NodeKind::Attribute;
  throw std::invalid_argument("unknown node kind '" + std::string(s) + "'");
}

ComponentId component_from_string(std::string_view s) {
  if (s == "reference") return ComponentId::Reference;
  if (s == "response") return ComponentId::Response;
  throw std::invalid_argument("unknown component '" + std::string(s) + "'");
}

bool is_propbank_predicate(std::string_view label) {
  const std::size_t dash = label.rfind('-');
  if (dash == std::string_view::npos || dash == 0) return false;
  const std::string_view suffix = label.substr(dash + 1);
  if (suffix.size() != 2) return false;
  for (const char c : suffix) {
    if (c < '0' || c > '9') return false;
  }
  const std::string_view stem = label.substr(0, dash);
  if (!(stem[0] >= 'a' && stem[0] <= 'z')) return false;
  return std::all_of(stem.begin(), stem.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

const GraphNode& DocumentGraph::node(int id) const {
  if (id < 0 || id >= node_count()) {
    throw std::out_of_range("node id " + std::to_string(id) + " out of range");
  }
  return nodes[static_cast<std::size_t>(id)];
}

std::vector<std::vector<int>> DocumentGraph::out_adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& edge : edges) {
    adj[static_cast<std::size_t>(edge.source)].push_back(edge.target);
  }
  return adj;
}

std::vector<std::vector<int>> DocumentGraph::undirected_adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& edge : edges) {
    adj[static_cast<std::size_t>(edge.source)].push_back(edge.target);
    adj[static_cast<std::size_t>(edge.target)].push_back(edge.source);
  }
  return adj;
}

std::vector<int> DocumentGraph::sentence_node_of() const {
  std::vector<int> result(nodes.size(), -1);
  std::map<int, int> by_index;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Sentence && n.sentence_index) {
      by_index[*n.sentence_index] = n.id;
    }
  }
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Document) continue;
    if (n.kind == NodeKind::Sentence) {
      result[static_cast<std::size_t>(n.id)] = n.id;
    } else if (n.sentence_index) {
      auto it = by_index.find(*n.sentence_index);
      if (it != by_index.end()) result[static_cast<std::size_t>(n.id)] = it->second;
    }
  }
  return result;
}

void DocumentGraph::validate() const {
  if (nodes.empty()) throw std::invalid_argument("document graph has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<int>(i)) {
      throw std::invalid_argument("node ids must be dense and ordered");
    }
    if (nodes[i].component != component) {
      throw std::invalid_argument("node component mismatch");
    }
  }
  int documents = 0;
  for (const auto& n : nodes) documents += n.kind == NodeKind::Document ? 1 : 0;
  if (documents != 1 || node(root).kind != NodeKind::Document) {
    throw std::invalid_argument("expected exactly one document node at the root");
  }
  for (const auto& edge : edges) {
    node(edge.source);
    node(edge.target);
    if (edge.role.empty() || edge.role[0] != ':') {
      throw std::invalid_argument("role '" + edge.role + "' must begin with ':'");
    }
    if (edge.source == root && node(edge.target).kind != NodeKind::Sentence) {
      throw std::invalid_argument("document children must be sentence nodes");
    }
  }
}

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(ComponentId component) { graph_.component = component; }

  int add_node(NodeKind kind, std::string label) {
    GraphNode node;
    node.id = graph_.node_count();
    node.kind = kind;
    node.component = graph_.component;
    node.label = std::move(label);
    graph_.nodes.push_back(std::move(node));
    return graph_.nodes.back().id;
  }

  void add_edge(int source, int target, std::string role) {
    graph_.edges.push_back({source, target, std::move(role)});
  }

  GraphNode& node(int id) { return graph_.nodes[static_cast<std::size_t>(id)]; }

  DocumentGraph finish() { return std::move(graph_); }

 private:
  DocumentGraph graph_;
};

// Expands one sentence's AMR into concept/attribute nodes in pre-order.
class SentenceExpander {
 public:
  SentenceExpander(GraphBuilder& builder, const penman::AmrSentenceGraph& amr,
                   int sentence_index)
      : builder_(builder), amr_(amr), sentence_index_(sentence_index) {
    for (std::size_t i = 0; i < amr.edges.size(); ++i) {
      by_source_[amr.edges[i].source].push_back(i);
    }
  }

  int expand(const std::string& var) {
    auto it = var_node_.find(var);
    if (it != var_node_.end()) return it->second;

    const std::string& concept_label = amr_.concept_of(var);
    const int id = builder_.add_node(NodeKind::Concept, concept_label);
    GraphNode& node = builder_.node(id);
    node.is_verb = is_propbank_predicate(concept_label);
    node.sentence_index = sentence_index_;
    node.amr_variable = var;
    auto alignment = amr_.token_alignments.find(var);
    if (alignment != amr_.token_alignments.end() && !alignment->second.empty()) {
      node.token_alignments = alignment->second;
    }
    var_node_.emplace(var, id);

    auto edges_it = by_source_.find(var);
    if (edges_it == by_source_.end()) return id;
    for (const std::size_t edge_index : edges_it->second) {
      const penman::Edge& edge = amr_.edges[edge_index];
      if (const auto* ref = std::get_if<penman::VarRef>(&edge.target)) {
        const int child = expand(ref->name);
        builder_.add_edge(id, child, edge.role);
      } else {
        const auto& lit = std::get<penman::AttributeLiteral>(edge.target);
        const int child = builder_.add_node(NodeKind::Attribute, lit.text);
        GraphNode& attr = builder_.node(child);
        attr.sentence_index = sentence_index_;
        if (!lit.token_alignments.empty()) attr.token_alignments = lit.token_alignments;
        builder_.add_edge(id, child, edge.role);
      }
    }
    return id;
  }

 private:
  GraphBuilder& builder_;
  const penman::AmrSentenceGraph& amr_;
  int sentence_index_;
  std::map<std::string, int> var_node_;
  std::map<std::string, std::vector<std::size_t>> by_source_;
};

}  // namespace

DocumentGraph build_document_graph(const std::vector<penman::AmrSentenceGraph>& sentences,
                                   ComponentId component) {
  if (sentences.empty()) {
    throw std::invalid_argument("build_document_graph: empty sentence list");
  }
  GraphBuilder builder(component);
  const int doc = builder.add_node(NodeKind::Document, "document");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    sentences[i].validate();
    const int sentence_node =
        builder.add_node(NodeKind::Sentence, sentences[i].sentence_text);
    builder.node(sentence_node).sentence_index = static_cast<int>(i);
    builder.add_edge(doc, sentence_node, ":snt" + std::to_string(i + 1));
    SentenceExpander expander(builder, sentences[i], static_cast<int>(i));
    const int amr_root = expander.expand(sentences[i].root);
    builder.add_edge(sentence_node, amr_root, ":root");
  }
  DocumentGraph g = builder.finish();
  g.validate();
  return g;
}

std::set<int> descendants(const DocumentGraph& g, int node_id) {
  g.node(node_id);  // range check
  const auto adj = g.out_adjacency();
  std::set<int> seen;
  std::vector<int> stack{node_id};
  while (!stack.empty()) {
    const int current = stack.back();
    stack.pop_back();
    for (const int next : adj[static_cast<std::size_t>(current)]) {
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  seen.erase(node_id);
  return seen;
}

void AlignedGraph::validate() const {
  reference.validate();
  response.validate();
  if (reference.component == response.component) {
    throw std::invalid_argument("aligned graph components must differ");
  }
  for (const auto& edge : alignment_edges) {
    reference.node(edge.ref_node);
    response.node(edge.resp_node);
    if (edge.capacity < 0.0 || edge.capacity > 1.0) {
      throw std::invalid_argument("alignment capacity must lie in [0,1]");
    }
    if (edge.flow && (*edge.flow < 0.0 || *edge.flow > edge.capacity + 1e-12)) {
      throw std::invalid_argument("alignment flow must lie in [0, capacity]");
    }
  }
}

AlignedGraph merge_aligned_graph(DocumentGraph ref, DocumentGraph resp,
                                 std::vector<AlignmentEdge> edges) {
  if (ref.component == resp.component) {
    throw std::invalid_argument(
        "merge_aligned_graph: graphs belong to the same component");
  }
  if (ref.component != ComponentId::Reference) {
    throw std::invalid_argument("merge_aligned_graph: first graph must be the reference");
  }
  AlignedGraph g;
  g.reference = std::move(ref);
  g.response = std::move(resp);
  g.alignment_edges = std::move(edges);
  g.validate();
  return g;
}

namespace detail {

json node_to_json(const GraphNode& node) {
  json j;
  j["id"] = node.id;
  j["kind"] = std::string(to_string(node.kind));
  j["label"] = node.label;
  j["is_verb"] = node.is_verb;
  if (node.sentence_index) j["sentence_index"] = *node.sentence_index;
  if (node.token_alignments) j["token_alignments"] = *node.token_alignments;
  if (node.amr_variable) j["variable"] = *node.amr_variable;
  return j;
}

GraphNode node_from_json(const json& j) {
  GraphNode node;
  node.id = j.at("id").get<int>();
  node.kind = node_kind_from_string(j.at("kind").get<std::string>());
  node.label = j.at("label").get<std::string>();
  node.is_verb = j.value("is_verb", false);
  if (j.contains("sentence_index")) node.sentence_index = j["sentence_index"].get<int>();
  if (j.contains("token_alignments")) {
    node.token_alignments = j["token_alignments"].get<std::vector<int>>();
  }
  if (j.contains("variable")) node.amr_variable = j["variable"].get<std::string>();
  return node;
}

json document_graph_to_json(const DocumentGraph& g) {
  json j;
  j["component"] = std::string(to_string(g.component));
  j["root"] = g.root;
  j["nodes"] = json::array();
  for (const auto& node : g.nodes) j["nodes"].push_back(node_to_json(node));
  j["edges"] = json::array();
  for (const auto& edge : g.edges) {
    j["edges"].push_back({{"source", edge.source}, {"target", edge.target}, {"role", edge.role}});
  }
  return j;
}

DocumentGraph document_graph_from_json(const json& j) {
  DocumentGraph g;
  g.component = component_from_string(j.at("component").get<std::string>());
  g.root = j.at("root").get<int>();
  for (const auto& node_json : j.at("nodes")) {
    GraphNode node = node_from_json(node_json);
    node.component = g.component;
    g.nodes.push_back(std::move(node));
  }
  for (const auto& edge_json : j.at("edges")) {
    g.edges.push_back({edge_json.at("source").get<int>(), edge_json.at("target").get<int>(),
                       edge_json.at("role").get<std::string>()});
  }
  g.validate();
  return g;
}

json aligned_graph_to_json_obj(const AlignedGraph& g) {
  json j;
  j["format_version"] = kAlignedGraphFormatVersion;
  j["reference"] = document_graph_to_json(g.reference);
  j["response"] = document_graph_to_json(g.response);
  j["alignment_edges"] = json::array();
  for (const auto& edge : g.alignment_edges) {
    json e;
    e["ref"] = edge.ref_node;
    e["resp"] = edge.resp_node;
    e["capacity"] = edge.capacity;
    if (edge.flow) e["flow"] = *edge.flow;
    j["alignment_edges"].push_back(std::move(e));
  }
  return j;
}

AlignedGraph aligned_graph_from_json_obj(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kAlignedGraphFormatVersion) {
    throw std::invalid_argument("unsupported aligned-graph format_version " +
                                std::to_string(version));
  }
  AlignedGraph g;
  g.reference = document_graph_from_json(j.at("reference"));
  g.response = document_graph_from_json(j.at("response"));
  for (const auto& e : j.at("alignment_edges")) {
    AlignmentEdge edge;
    edge.ref_node = e.at("ref").get<int>();
    edge.resp_node = e.at("resp").get<int>();
    edge.capacity = e.at("capacity").get<double>();
    if (e.contains("flow")) edge.flow = e["flow"].get<double>();
    g.alignment_edges.push_back(edge);
  }
  g.validate();
  return g;
}

}  // namespace detail

std::string aligned_graph_to_json(const AlignedGraph& g, int indent) {
  return detail::aligned_graph_to_json_obj(g).dump(indent);
}

AlignedGraph aligned_graph_from_json(const std::string& text) {
  return detail::aligned_graph_from_json_obj(detail::json::parse(text));
}

}  // namespace groundcheck
