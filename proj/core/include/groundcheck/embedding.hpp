#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "groundcheck/document_graph.hpp"

namespace groundcheck {

/// Text-embedding backend. Sentence-level and per-word-piece vectors of a
/// fixed dimension, deterministic for identical input.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const = 0;
  virtual std::vector<double> embed_sentence(const std::string& text) = 0;
  virtual std::vector<std::vector<double>> embed_tokens(const std::string& text) = 0;
  /// Whether concurrent calls from multiple threads are allowed.
  virtual bool thread_safe() const { return false; }
};

/// Hash-seeded pseudo-random unit vectors; the deterministic provider used
/// by tests and the synthetic corpus. Token vectors are derived from each
/// whitespace token's own surface text so the same word correlates across
/// sentences.
class TestEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit TestEmbeddingProvider(int dimension, std::uint64_t seed = 0);

  int dimension() const override { return dimension_; }
  std::vector<double> embed_sentence(const std::string& text) override;
  std::vector<std::vector<double>> embed_tokens(const std::string& text) override;
  bool thread_safe() const override { return true; }

 private:
  std::vector<double> unit_vector(const std::string& salted) const;

  int dimension_;
  std::uint64_t seed_;
};

/// Talks a line-delimited JSON protocol to a child process:
///   request  {"kind":"sentence"|"tokens","text":...}
///   response {"vectors":[[...],...]}
/// One JSON document per line, UTF-8. The child is restarted on failure up
/// to `retries` times; calls must come from one thread at a time.
class SubprocessEmbeddingProvider : public EmbeddingProvider {
 public:
  SubprocessEmbeddingProvider(std::string command, int dimension,
                              int timeout_ms = 10000, int retries = 1);
  ~SubprocessEmbeddingProvider() override;

  SubprocessEmbeddingProvider(const SubprocessEmbeddingProvider&) = delete;
  SubprocessEmbeddingProvider& operator=(const SubprocessEmbeddingProvider&) = delete;

  int dimension() const override { return dimension_; }
  std::vector<double> embed_sentence(const std::string& text) override;
  std::vector<std::vector<double>> embed_tokens(const std::string& text) override;
  bool thread_safe() const override { return false; }

 private:
  struct Child;
  std::vector<std::vector<double>> request(const std::string& kind, const std::string& text);
  void ensure_child();

  std::string command_;
  int dimension_;
  int timeout_ms_;
  int retries_;
  std::unique_ptr<Child> child_;
};

/// Weights and dampening constants for the node-embedding and capacity
/// pipeline. Defaults are neutral (all weights 1, two-hop context with a
/// halved second hop) and fully overridable from config.
struct EmbedHyperParams {
  double role_child_weight = 1.0;      // applied to the role child embedding
  double role_name_weight = 1.0;       // applied to role name + semantic tag
  double concept_token_weight = 1.0;   // token-alignment term
  double concept_roleset_weight = 1.0; // roleset / node-text term
  double concept_role_weight = 1.0;    // outgoing role-edge sum
  std::vector<double> neighborhood_weights = {1.0, 0.5};  // per hop, all > 0
  std::array<double, 4> dampening_by_kind = {1.0, 1.0, 1.0, 1.0};  // mu, by NodeKind
  double sentence_damp = 0.5;          // lambda in [0,1]
  double sigmoid_shift = 0.5;
  bool include_self = true;            // self term in neighborhood expansion

  double dampening(NodeKind kind) const {
    return dampening_by_kind[static_cast<std::size_t>(kind)];
  }
  void validate() const;
};

/// PropBank frame lookup: roleset -> descriptive text, (roleset, role) ->
/// semantic tag. Optional; when absent the semantic-tag term is zero and
/// roleset text falls back to the concept label.
struct FrameDb {
  std::map<std::string, std::string> roleset_text;
  std::map<std::string, std::map<std::string, std::string>> role_tags;

  const std::string* find_roleset_text(const std::string& roleset) const;
  const std::string* find_role_tag(const std::string& roleset, const std::string& role) const;
  static FrameDb load_json_file(const std::string& path);
};

/// Per-node vectors, indexed by node id. `base` holds the node-level
/// embeddings; `neighborhood` holds the graph-context expansion used for
/// alignment scoring.
struct NodeEmbeddings {
  std::vector<std::vector<double>> base;
  std::vector<std::vector<double>> neighborhood;
};

std::vector<double> sentence_embedding(EmbeddingProvider& provider, const std::string& text);

/// Sum of the provider's word-piece vectors over the node's aligned tokens;
/// the all-ones vector when the node has no alignments.
std::vector<double> token_concept_embedding(EmbeddingProvider& provider,
                                            const GraphNode& node,
                                            const std::string& sentence_text);

/// (embed(role name) + embed(semantic tag)) * role_name_weight
///   + child_embedding * role_child_weight.
/// An empty semantic tag contributes the zero vector.
std::vector<double> role_edge_embedding(EmbeddingProvider& provider,
                                        const std::string& role_label,
                                        const std::string& role_semantic_tag,
                                        const std::vector<double>& child_embedding,
                                        const EmbedHyperParams& hp);

std::vector<double> concept_embedding(EmbeddingProvider& provider, const GraphNode& node,
                                      const std::vector<double>& token_embedding,
                                      const std::vector<std::vector<double>>& child_role_edges,
                                      const EmbedHyperParams& hp,
                                      const FrameDb* frames = nullptr);

std::vector<double> attribute_embedding(EmbeddingProvider& provider, const GraphNode& node,
                                        const std::string& sentence_text);

std::vector<double> document_embedding(const std::vector<std::vector<double>>& child_embeddings);

/// Nodes at exactly 1..k hops from `node` on the undirected intra-text
/// graph; sets are pairwise disjoint and exclude the node itself.
std::vector<std::vector<int>> exact_hop_sets(const DocumentGraph& g, int node, int k);

std::vector<double> neighborhood_embedding(const DocumentGraph& g,
                                           const std::vector<std::vector<double>>& base,
                                           int node, const EmbedHyperParams& hp);

/// Computes base embeddings bottom-up (attributes/concepts, then sentences,
/// then the document) and the neighborhood expansion for every node.
NodeEmbeddings compute_all_embeddings(const DocumentGraph& g, EmbeddingProvider& provider,
                                      const EmbedHyperParams& hp,
                                      const FrameDb* frames = nullptr);

}  // namespace groundcheck
