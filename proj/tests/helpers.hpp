#pragma once

// Shared test utilities: random AMR graphs with an isomorphism check,
// random flow networks with a brute-force min-cut oracle, and small
// pipeline-built graph instances.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "groundcheck/dataset.hpp"
#include "groundcheck/flow.hpp"
#include "groundcheck/metrics.hpp"
#include "groundcheck/penman.hpp"
#include "groundcheck/pipeline.hpp"
#include "groundcheck/rng.hpp"

namespace testutil {

using groundcheck::Rng;

// --------------------------------------------------------------------------
// Random valid AMR sentence graphs (<= max_nodes variables + attributes).

inline groundcheck::penman::AmrSentenceGraph random_amr(Rng& rng, int max_nodes = 12) {
  using namespace groundcheck::penman;
  static const std::vector<std::string> concepts = {
      "boy", "girl", "want-01", "go-02", "see-01", "city", "name", "dog", "house",
      "run-02", "tall", "book"};
  static const std::vector<std::string> roles = {":ARG0", ":ARG1", ":ARG2", ":mod",
                                                 ":name", ":op1", ":poss", ":location"};

  AmrSentenceGraph g;
  const int n_vars = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_nodes - 1)));
  for (int i = 0; i < n_vars; ++i) {
    std::string var = std::string(1, static_cast<char>('a' + (i % 26)));
    if (i >= 26) var += std::to_string(i / 26);
    g.variables.emplace_back(var, concepts[rng.bounded(concepts.size())]);
  }
  g.root = g.variables.front().first;
  // Spanning tree: each non-root variable hangs under an earlier one.
  for (int i = 1; i < n_vars; ++i) {
    const auto& parent = g.variables[rng.bounded(static_cast<std::uint64_t>(i))].first;
    g.edges.push_back({parent, roles[rng.bounded(roles.size())],
                       VarRef{g.variables[static_cast<std::size_t>(i)].first}});
  }
  // Occasional reentrancy.
  if (n_vars > 2 && rng.uniform() < 0.6) {
    const auto& from = g.variables[rng.bounded(static_cast<std::uint64_t>(n_vars))].first;
    const auto& to = g.variables[rng.bounded(static_cast<std::uint64_t>(n_vars))].first;
    g.edges.push_back({from, ":ARG2", VarRef{to}});
  }
  // Occasional attributes.
  if (rng.uniform() < 0.7) {
    const auto& from = g.variables[rng.bounded(static_cast<std::uint64_t>(n_vars))].first;
    const double pickd = rng.uniform();
    AttributeLiteral lit;
    if (pickd < 0.33) {
      lit.text = "-";
    } else if (pickd < 0.66) {
      lit.text = "Rome";
      lit.quoted = true;
    } else {
      lit.text = std::to_string(rng.bounded(100));
    }
    g.edges.push_back({from, ":polarity", lit});
  }
  g.sentence_text = "generated sentence";
  return g;
}

// Isomorphism over variables, concepts, and edges. Variable names are
// preserved by the serializer, so direct comparison of sorted structures
// suffices; edge multisets make reentrancy counts part of the check.
inline bool amr_isomorphic(const groundcheck::penman::AmrSentenceGraph& a,
                           const groundcheck::penman::AmrSentenceGraph& b) {
  using namespace groundcheck::penman;
  if (a.root != b.root) return false;
  auto sorted_vars = [](const AmrSentenceGraph& g) {
    auto v = g.variables;
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted_vars(a) != sorted_vars(b)) return false;
  auto edge_key = [](const Edge& e) {
    std::ostringstream out;
    out << e.source << '\x1f' << e.role << '\x1f';
    if (const auto* ref = std::get_if<VarRef>(&e.target)) {
      out << 'v' << ref->name;
    } else {
      const auto& lit = std::get<AttributeLiteral>(e.target);
      out << 'a' << lit.text << '\x1f' << lit.quoted;
    }
    return out.str();
  };
  std::multiset<std::string> ea, eb;
  for (const auto& e : a.edges) ea.insert(edge_key(e));
  for (const auto& e : b.edges) eb.insert(edge_key(e));
  return ea == eb;
}

// --------------------------------------------------------------------------
// Random flow networks and the exhaustive min-cut oracle.

inline groundcheck::FlowNetwork random_network(Rng& rng, int max_nodes = 10) {
  groundcheck::FlowNetwork net;
  net.node_count = 4 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_nodes - 3)));
  net.source = 0;
  net.sink = net.node_count - 1;
  for (int u = 0; u < net.node_count; ++u) {
    for (int v = 0; v < net.node_count; ++v) {
      if (u == v || v == net.source || u == net.sink) continue;
      if (rng.uniform() < 0.35) {
        net.arcs.push_back({u, v, rng.uniform()});
      }
    }
  }
  return net;
}

// Min cut by enumerating every source-side subset containing s but not t.
inline double brute_force_min_cut(const groundcheck::FlowNetwork& net) {
  const int n = net.node_count;
  const int free_nodes = n - 2;  // everything except source and sink
  double best = 0.0;
  bool first = true;
  for (std::uint64_t mask = 0; mask < (1ull << free_nodes); ++mask) {
    std::vector<bool> in_source(static_cast<std::size_t>(n), false);
    in_source[static_cast<std::size_t>(net.source)] = true;
    int bit = 0;
    for (int v = 0; v < n; ++v) {
      if (v == net.source || v == net.sink) continue;
      in_source[static_cast<std::size_t>(v)] = (mask >> bit) & 1;
      ++bit;
    }
    double cut = 0.0;
    for (const auto& arc : net.arcs) {
      if (in_source[static_cast<std::size_t>(arc.from)] &&
          !in_source[static_cast<std::size_t>(arc.to)]) {
        cut += arc.capacity;
      }
    }
    if (first || cut < best) {
      best = cut;
      first = false;
    }
  }
  return best;
}

// --------------------------------------------------------------------------
// Small pipeline-built instances for GNN and training tests.

inline groundcheck::Config tuned_synth_config() {
  groundcheck::Config config;
  config.embedding.hyper.dampening_by_kind = {1.0, 2.0, 4.0, 4.0};
  config.embedding.hyper.sentence_damp = 0.8;
  config.gnn.edge_weighting = groundcheck::EdgeWeighting::Capacity;
  return config;
}

inline std::vector<groundcheck::GraphInstance> synth_instances(std::size_t n,
                                                               std::uint64_t seed,
                                                               groundcheck::Config config) {
  groundcheck::Pipeline pipeline(std::move(config));
  const groundcheck::Dataset dataset = groundcheck::synth_corpus({n, 0.5, seed});
  std::vector<groundcheck::GraphInstance> instances;
  instances.reserve(dataset.examples.size());
  for (const auto& record : dataset.examples) {
    instances.push_back(pipeline.process_record(record));
  }
  return instances;
}

}  // namespace testutil
