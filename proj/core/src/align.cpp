#include "groundcheck/align.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace groundcheck {

double dampened_similarity(const std::vector<double>& v1, const std::vector<double>& v2,
                           double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  if (v1.size() != v2.size() || v1.empty()) {
    throw std::invalid_argument("dampened_similarity: dimension mismatch");
  }
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    dot += v1[i] * v2[i];
    n1 += v1[i] * v1[i];
    n2 += v2[i] * v2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) {
    throw std::invalid_argument("dampened_similarity: zero vector");
  }
  double cosine = dot / (std::sqrt(n1) * std::sqrt(n2));
  cosine = std::clamp(cosine, 0.0, 1.0);
  if (mu == 1.0) return cosine;
  return std::pow(cosine, mu);
}

double translated_sigmoid(double x, double shift) {
  return 1.0 / (1.0 + std::exp(shift - x)) - 0.5;
}

double capacity_from_similarity(double c, double shift) {
  return std::clamp(c + translated_sigmoid(c, shift), 0.0, 1.0);
}

double capacity(const std::vector<double>& v1, const std::vector<double>& v2, double mu,
                double shift) {
  return capacity_from_similarity(dampened_similarity(v1, v2, mu), shift);
}

double sentence_skew(double sentence_capacity, double lambda) {
  return sentence_capacity * lambda + (1.0 - lambda);
}

double concept_capacity(double base_capacity, double skew, bool same_amr_variable) {
  if (same_amr_variable) return 1.0;
  return base_capacity * skew;
}

const double* CapacityTable::find(int ref_node, int resp_node) const {
  auto it = std::lower_bound(entries.begin(), entries.end(),
                             std::pair<int, int>{ref_node, resp_node},
                             [](const CapacityEntry& e, const std::pair<int, int>& key) {
                               return std::pair<int, int>{e.ref_node, e.resp_node} < key;
                             });
  if (it == entries.end() || it->ref_node != ref_node || it->resp_node != resp_node) {
    return nullptr;
  }
  return &it->capacity;
}

std::vector<AlignmentEdge> CapacityTable::to_alignment_edges() const {
  std::vector<AlignmentEdge> edges;
  edges.reserve(entries.size());
  for (const auto& entry : entries) {
    edges.push_back({entry.ref_node, entry.resp_node, entry.capacity, std::nullopt});
  }
  return edges;
}

namespace {

const std::vector<double>& neighborhood_of(const NodeEmbeddings& embeddings, int id) {
  if (static_cast<std::size_t>(id) >= embeddings.neighborhood.size() ||
      embeddings.neighborhood[static_cast<std::size_t>(id)].empty()) {
    throw std::invalid_argument("missing neighborhood embedding for node " +
                                std::to_string(id));
  }
  return embeddings.neighborhood[static_cast<std::size_t>(id)];
}

std::vector<int> nodes_of_kind(const DocumentGraph& g, NodeKind kind) {
  std::vector<int> ids;
  for (const auto& node : g.nodes) {
    if (node.kind == kind) ids.push_back(node.id);
  }
  return ids;
}

}  // namespace

CapacityTable induce_alignment_edges(const DocumentGraph& ref, const DocumentGraph& resp,
                                     const NodeEmbeddings& ref_embeddings,
                                     const NodeEmbeddings& resp_embeddings,
                                     const EmbedHyperParams& hp,
                                     const AlignOptions& options) {
  hp.validate();
  const double shift = hp.sigmoid_shift;
  CapacityTable table;

  // Sentence pairs first; concept and attribute skew depends on them.
  std::map<std::pair<int, int>, double> sentence_caps;
  const auto ref_sentences = nodes_of_kind(ref, NodeKind::Sentence);
  const auto resp_sentences = nodes_of_kind(resp, NodeKind::Sentence);
  const double mu_sentence = hp.dampening(NodeKind::Sentence);
  for (const int s1 : ref_sentences) {
    for (const int s2 : resp_sentences) {
      const double c = capacity(neighborhood_of(ref_embeddings, s1),
                                neighborhood_of(resp_embeddings, s2), mu_sentence, shift);
      if (c > 0.0) sentence_caps[{s1, s2}] = c;
    }
  }

  const auto ref_sentence_node = ref.sentence_node_of();
  const auto resp_sentence_node = resp.sentence_node_of();
  const double lambda = hp.sentence_damp;

  auto skew_for = [&](int ref_id, int resp_id) {
    const int s1 = ref_sentence_node[static_cast<std::size_t>(ref_id)];
    const int s2 = resp_sentence_node[static_cast<std::size_t>(resp_id)];
    double sentence_capacity = 0.0;  // unaligned ancestor pair counts as zero
    auto it = sentence_caps.find({s1, s2});
    if (it != sentence_caps.end()) sentence_capacity = it->second;
    return sentence_skew(sentence_capacity, lambda);
  };

  // Concepts, with the shared-variable override.
  const double mu_concept = hp.dampening(NodeKind::Concept);
  for (const int n1 : nodes_of_kind(ref, NodeKind::Concept)) {
    for (const int n2 : nodes_of_kind(resp, NodeKind::Concept)) {
      const bool same_variable = options.shared_variable_namespace &&
                                 ref.node(n1).amr_variable && resp.node(n2).amr_variable &&
                                 *ref.node(n1).amr_variable == *resp.node(n2).amr_variable;
      const double base = capacity(neighborhood_of(ref_embeddings, n1),
                                   neighborhood_of(resp_embeddings, n2), mu_concept, shift);
      const double c = concept_capacity(base, skew_for(n1, n2), same_variable);
      if (c > 0.0) table.entries.push_back({n1, n2, c});
    }
  }

  // Attributes: direct capacity times sentence skew.
  const double mu_attribute = hp.dampening(NodeKind::Attribute);
  for (const int n1 : nodes_of_kind(ref, NodeKind::Attribute)) {
    for (const int n2 : nodes_of_kind(resp, NodeKind::Attribute)) {
      const double base = capacity(neighborhood_of(ref_embeddings, n1),
                                   neighborhood_of(resp_embeddings, n2), mu_attribute, shift);
      const double c = base * skew_for(n1, n2);
      if (c > 0.0) table.entries.push_back({n1, n2, c});
    }
  }

  for (const auto& [pair, c] : sentence_caps) {
    table.entries.push_back({pair.first, pair.second, c});
  }

  // Document pair.
  const double mu_document = hp.dampening(NodeKind::Document);
  const double doc_capacity =
      capacity(neighborhood_of(ref_embeddings, ref.root),
               neighborhood_of(resp_embeddings, resp.root), mu_document, shift);
  if (doc_capacity > 0.0) table.entries.push_back({ref.root, resp.root, doc_capacity});

  std::sort(table.entries.begin(), table.entries.end(),
            [](const CapacityEntry& a, const CapacityEntry& b) {
              return std::pair<int, int>{a.ref_node, a.resp_node} <
                     std::pair<int, int>{b.ref_node, b.resp_node};
            });
  return table;
}

}  // namespace groundcheck
