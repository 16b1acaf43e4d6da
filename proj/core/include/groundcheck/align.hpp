#pragma once

#include <map>
#include <utility>
#include <vector>

#include "groundcheck/document_graph.hpp"
#include "groundcheck/embedding.hpp"

namespace groundcheck {

/// Cosine similarity raised to mu. Negative cosines are clamped to zero
/// before dampening (fractional powers of negatives are undefined and the
/// capacity transform sends them to zero regardless).
double dampened_similarity(const std::vector<double>& v1, const std::vector<double>& v2,
                           double mu);

/// sigma(x) = 1 / (1 + exp(shift - x)) - 0.5; zero at x == shift.
double translated_sigmoid(double x, double shift = 0.5);

/// clamp_[0,1](c + sigma(c)) applied to a dampened similarity c.
double capacity_from_similarity(double c, double shift = 0.5);

double capacity(const std::vector<double>& v1, const std::vector<double>& v2, double mu,
                double shift = 0.5);

/// C_s * lambda + (1 - lambda); bounded in [1 - lambda, 1].
double sentence_skew(double sentence_capacity, double lambda);

/// 1 when the pair shares an AMR variable, otherwise base * skew.
double concept_capacity(double base_capacity, double skew, bool same_amr_variable);

struct CapacityEntry {
  int ref_node = 0;
  int resp_node = 0;
  double capacity = 0.0;
};

/// Retained alignment candidates (capacity > 0), restricted to
/// kind-compatible cross-component pairs, ordered by (ref_node, resp_node).
struct CapacityTable {
  std::vector<CapacityEntry> entries;

  const double* find(int ref_node, int resp_node) const;
  std::vector<AlignmentEdge> to_alignment_edges() const;
};

struct AlignOptions {
  /// The reference and response are parsed independently, so identical
  /// variable names are coincidences unless the caller declares the two
  /// texts share a namespace.
  bool shared_variable_namespace = false;
};

/// Scores every kind-compatible cross pair from neighborhood-aware
/// embeddings, applies sentence skew to concept/attribute pairs and the
/// shared-variable rule to concepts, and retains positive capacities.
CapacityTable induce_alignment_edges(const DocumentGraph& ref, const DocumentGraph& resp,
                                     const NodeEmbeddings& ref_embeddings,
                                     const NodeEmbeddings& resp_embeddings,
                                     const EmbedHyperParams& hp,
                                     const AlignOptions& options = {});

}  // namespace groundcheck
