#include "groundcheck/embedding.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "groundcheck/rng.hpp"

namespace groundcheck {

namespace {

using Vec = std::vector<double>;

Vec zeros(std::size_t d) { return Vec(d, 0.0); }

void add_scaled(Vec& dst, const Vec& src, double w) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

// Sum of word-piece vectors over the node's aligned token indices.
Vec aligned_token_sum(const GraphNode& node,
                      const std::vector<Vec>& token_vectors, std::size_t d) {
  Vec sum = zeros(d);
  for (const int index : *node.token_alignments) {
    if (index < 0 || static_cast<std::size_t>(index) >= token_vectors.size()) {
      throw std::out_of_range("token alignment index " + std::to_string(index) +
                              " out of range for node " + std::to_string(node.id));
    }
    add_scaled(sum, token_vectors[static_cast<std::size_t>(index)], 1.0);
  }
  return sum;
}

}  // namespace

void EmbedHyperParams::validate() const {
  if (neighborhood_weights.empty()) {
    throw std::invalid_argument("neighborhood_weights must be non-empty");
  }
  for (const double w : neighborhood_weights) {
    if (!(w > 0.0)) throw std::invalid_argument("neighborhood weights must be > 0");
  }
  for (const double mu : dampening_by_kind) {
    if (!(mu > 0.0)) throw std::invalid_argument("dampening must be > 0");
  }
  if (sentence_damp < 0.0 || sentence_damp > 1.0) {
    throw std::invalid_argument("sentence_damp must lie in [0,1]");
  }
}

// ---------------------------------------------------------------------------
// TestEmbeddingProvider

TestEmbeddingProvider::TestEmbeddingProvider(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension <= 0) throw std::invalid_argument("dimension must be positive");
}

std::vector<double> TestEmbeddingProvider::unit_vector(const std::string& salted) const {
  Rng rng(Rng::hash64(salted, seed_));
  Vec v(static_cast<std::size_t>(dimension_));
  double norm_sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm_sq += x * x;
  }
  if (norm_sq == 0.0) {
    v[0] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v) x *= inv;
  return v;
}

std::vector<double> TestEmbeddingProvider::embed_sentence(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("embed_sentence: empty text");
  return unit_vector("s\x1f" + text);
}

std::vector<std::vector<double>> TestEmbeddingProvider::embed_tokens(const std::string& text) {
  std::vector<Vec> vectors;
  for (const auto& token : whitespace_tokens(text)) {
    vectors.push_back(unit_vector("t\x1f" + token));
  }
  return vectors;
}

// ---------------------------------------------------------------------------
// SubprocessEmbeddingProvider

struct SubprocessEmbeddingProvider::Child {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;

  ~Child() { shutdown(); }

  void shutdown() {
    if (to_child >= 0) close(to_child);
    if (from_child >= 0) close(from_child);
    to_child = from_child = -1;
    if (pid > 0) {
      kill(pid, SIGTERM);
      int status = 0;
      waitpid(pid, &status, 0);
      pid = -1;
    }
  }
};

SubprocessEmbeddingProvider::SubprocessEmbeddingProvider(std::string command, int dimension,
                                                         int timeout_ms, int retries)
    : command_(std::move(command)),
      dimension_(dimension),
      timeout_ms_(timeout_ms),
      retries_(retries) {
  if (dimension <= 0) throw std::invalid_argument("dimension must be positive");
  if (command_.empty()) throw std::invalid_argument("provider command is empty");
}

SubprocessEmbeddingProvider::~SubprocessEmbeddingProvider() = default;

void SubprocessEmbeddingProvider::ensure_child() {
  if (child_ && child_->pid > 0) return;
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw std::runtime_error("failed to create provider pipes");
  }
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("failed to fork embedding provider");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  child_ = std::make_unique<Child>();
  child_->pid = pid;
  child_->to_child = in_pipe[1];
  child_->from_child = out_pipe[0];
}

std::vector<std::vector<double>> SubprocessEmbeddingProvider::request(
    const std::string& kind, const std::string& text) {
  nlohmann::json req;
  req["kind"] = kind;
  req["text"] = text;
  const std::string line = req.dump() + "\n";

  std::string error;
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    try {
      ensure_child();
      std::size_t written = 0;
      while (written < line.size()) {
        const ssize_t n =
            write(child_->to_child, line.data() + written, line.size() - written);
        if (n <= 0) throw std::runtime_error("provider pipe closed while writing");
        written += static_cast<std::size_t>(n);
      }
      // Read one response line, honoring the timeout.
      for (;;) {
        const std::size_t newline = child_->buffer.find('\n');
        if (newline != std::string::npos) {
          const std::string payload = child_->buffer.substr(0, newline);
          child_->buffer.erase(0, newline + 1);
          nlohmann::json resp = nlohmann::json::parse(payload);
          if (resp.contains("error")) {
            throw std::runtime_error("provider error: " + resp["error"].get<std::string>());
          }
          std::vector<Vec> vectors;
          for (const auto& v : resp.at("vectors")) {
            Vec vec = v.get<Vec>();
            if (static_cast<int>(vec.size()) != dimension_) {
              throw std::runtime_error("provider returned dimension " +
                                       std::to_string(vec.size()) + ", expected " +
                                       std::to_string(dimension_));
            }
            vectors.push_back(std::move(vec));
          }
          return vectors;
        }
        pollfd pfd{child_->from_child, POLLIN, 0};
        const int ready = poll(&pfd, 1, timeout_ms_);
        if (ready <= 0) throw std::runtime_error("provider timed out");
        char chunk[4096];
        const ssize_t n = read(child_->from_child, chunk, sizeof(chunk));
        if (n <= 0) throw std::runtime_error("provider closed its output");
        child_->buffer.append(chunk, static_cast<std::size_t>(n));
      }
    } catch (const std::exception& e) {
      error = e.what();
      if (child_) child_->shutdown();
      child_.reset();
    }
  }
  throw std::runtime_error("embedding provider failed after " +
                           std::to_string(retries_ + 1) + " attempts: " + error);
}

std::vector<double> SubprocessEmbeddingProvider::embed_sentence(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("embed_sentence: empty text");
  auto vectors = request("sentence", text);
  if (vectors.size() != 1) {
    throw std::runtime_error("provider returned " + std::to_string(vectors.size()) +
                             " vectors for a sentence request");
  }
  return std::move(vectors[0]);
}

std::vector<std::vector<double>> SubprocessEmbeddingProvider::embed_tokens(
    const std::string& text) {
  return request("tokens", text);
}

// ---------------------------------------------------------------------------
// FrameDb

const std::string* FrameDb::find_roleset_text(const std::string& roleset) const {
  auto it = roleset_text.find(roleset);
  return it == roleset_text.end() ? nullptr : &it->second;
}

const std::string* FrameDb::find_role_tag(const std::string& roleset,
                                          const std::string& role) const {
  auto it = role_tags.find(roleset);
  if (it == role_tags.end()) return nullptr;
  auto role_it = it->second.find(role);
  return role_it == it->second.end() ? nullptr : &role_it->second;
}

FrameDb FrameDb::load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frame database '" + path + "'");
  nlohmann::json j;
  in >> j;
  FrameDb db;
  for (const auto& [roleset, entry] : j.items()) {
    if (entry.contains("text")) db.roleset_text[roleset] = entry["text"].get<std::string>();
    if (entry.contains("roles")) {
      for (const auto& [role, tag] : entry["roles"].items()) {
        db.role_tags[roleset][role] = tag.get<std::string>();
      }
    }
  }
  return db;
}

// ---------------------------------------------------------------------------
// Node embedding equations

std::vector<double> sentence_embedding(EmbeddingProvider& provider, const std::string& text) {
  if (text.empty()) throw std::invalid_argument("sentence_embedding: empty text");
  return provider.embed_sentence(text);
}

std::vector<double> token_concept_embedding(EmbeddingProvider& provider,
                                            const GraphNode& node,
                                            const std::string& sentence_text) {
  if (node.kind != NodeKind::Concept) {
    throw std::invalid_argument("token_concept_embedding: node is not a concept");
  }
  const std::size_t d = static_cast<std::size_t>(provider.dimension());
  if (!node.token_alignments || node.token_alignments->empty()) {
    return Vec(d, 1.0);  // constant fallback keeps the node defined
  }
  return aligned_token_sum(node, provider.embed_tokens(sentence_text), d);
}

std::vector<double> role_edge_embedding(EmbeddingProvider& provider,
                                        const std::string& role_label,
                                        const std::string& role_semantic_tag,
                                        const std::vector<double>& child_embedding,
                                        const EmbedHyperParams& hp) {
  const std::size_t d = static_cast<std::size_t>(provider.dimension());
  if (child_embedding.size() != d) {
    throw std::invalid_argument("role_edge_embedding: child embedding has wrong dimension");
  }
  std::string name = role_label;
  if (!name.empty() && name[0] == ':') name.erase(0, 1);
  Vec names = zeros(d);
  if (!name.empty()) add_scaled(names, provider.embed_sentence(name), 1.0);
  if (!role_semantic_tag.empty()) {
    add_scaled(names, provider.embed_sentence(role_semantic_tag), 1.0);
  }
  Vec result = zeros(d);
  add_scaled(result, names, hp.role_name_weight);
  add_scaled(result, child_embedding, hp.role_child_weight);
  return result;
}

std::vector<double> concept_embedding(EmbeddingProvider& provider, const GraphNode& node,
                                      const std::vector<double>& token_embedding,
                                      const std::vector<std::vector<double>>& child_role_edges,
                                      const EmbedHyperParams& hp, const FrameDb* frames) {
  const std::size_t d = static_cast<std::size_t>(provider.dimension());
  Vec result = zeros(d);
  add_scaled(result, token_embedding, hp.concept_token_weight);

  std::string roleset_or_text = node.label;
  if (node.is_verb && frames) {
    if (const std::string* text = frames->find_roleset_text(node.label)) {
      roleset_or_text = *text;
    }
  }
  add_scaled(result, provider.embed_sentence(roleset_or_text), hp.concept_roleset_weight);

  if (node.is_verb) {
    for (const auto& edge : child_role_edges) {
      add_scaled(result, edge, hp.concept_role_weight);
    }
  }
  return result;
}

std::vector<double> attribute_embedding(EmbeddingProvider& provider, const GraphNode& node,
                                        const std::string& sentence_text) {
  if (node.kind != NodeKind::Attribute) {
    throw std::invalid_argument("attribute_embedding: node is not an attribute");
  }
  const std::size_t d = static_cast<std::size_t>(provider.dimension());
  if (node.token_alignments && !node.token_alignments->empty()) {
    return aligned_token_sum(node, provider.embed_tokens(sentence_text), d);
  }
  return provider.embed_sentence(node.label.empty() ? "-" : node.label);
}

std::vector<double> document_embedding(const std::vector<std::vector<double>>& child_embeddings) {
  if (child_embeddings.empty()) {
    throw std::invalid_argument("document_embedding: no children");
  }
  Vec mean = zeros(child_embeddings.front().size());
  for (const auto& child : child_embeddings) add_scaled(mean, child, 1.0);
  const double inv = 1.0 / static_cast<double>(child_embeddings.size());
  for (auto& x : mean) x *= inv;
  return mean;
}

std::vector<std::vector<int>> exact_hop_sets(const DocumentGraph& g, int node, int k) {
  g.node(node);
  if (k < 1) throw std::invalid_argument("hop count must be >= 1");
  const auto adj = g.undirected_adjacency();
  std::vector<int> dist(g.nodes.size(), -1);
  dist[static_cast<std::size_t>(node)] = 0;
  std::vector<int> frontier{node};
  std::vector<std::vector<int>> hops(static_cast<std::size_t>(k));
  for (int level = 1; level <= k && !frontier.empty(); ++level) {
    std::vector<int> next;
    for (const int u : frontier) {
      for (const int v : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = level;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    hops[static_cast<std::size_t>(level - 1)] = next;
    frontier = std::move(next);
  }
  return hops;
}

std::vector<double> neighborhood_embedding(const DocumentGraph& g,
                                           const std::vector<std::vector<double>>& base,
                                           int node, const EmbedHyperParams& hp) {
  hp.validate();
  const int k = static_cast<int>(hp.neighborhood_weights.size());
  const auto hops = exact_hop_sets(g, node, k);
  if (base.size() != g.nodes.size() || base[static_cast<std::size_t>(node)].empty()) {
    throw std::invalid_argument("neighborhood_embedding: missing base embeddings");
  }
  Vec result = zeros(base[static_cast<std::size_t>(node)].size());
  if (hp.include_self) add_scaled(result, base[static_cast<std::size_t>(node)], 1.0);
  for (int i = 0; i < k; ++i) {
    const double w = hp.neighborhood_weights[static_cast<std::size_t>(i)];
    for (const int u : hops[static_cast<std::size_t>(i)]) {
      add_scaled(result, base[static_cast<std::size_t>(u)], w);
    }
  }
  return result;
}

namespace {

// Bottom-up embedding pass over one sentence's concept/attribute subgraph.
// Reentrancy can make the directed subgraph cyclic; a back edge falls back
// to the child's plain text embedding so the recursion terminates.
class SentenceEmbedder {
 public:
  SentenceEmbedder(const DocumentGraph& g, EmbeddingProvider& provider,
                   const EmbedHyperParams& hp, const FrameDb* frames,
                   std::vector<Vec>& base, const std::vector<int>& sentence_node)
      : g_(g),
        provider_(provider),
        hp_(hp),
        frames_(frames),
        base_(base),
        sentence_node_(sentence_node),
        out_edges_(g.nodes.size()),
        color_(g.nodes.size(), 0) {
    for (const auto& edge : g.edges) {
      out_edges_[static_cast<std::size_t>(edge.source)].push_back(&edge);
    }
  }

  void visit(int id) {
    const GraphNode& node = g_.node(id);
    if (node.kind == NodeKind::Attribute) {
      if (base_[static_cast<std::size_t>(id)].empty()) {
        base_[static_cast<std::size_t>(id)] =
            attribute_embedding(provider_, node, sentence_text_of(id));
      }
      return;
    }
    if (node.kind != NodeKind::Concept) return;
    if (color_[static_cast<std::size_t>(id)] != 0) return;
    color_[static_cast<std::size_t>(id)] = 1;

    std::vector<Vec> role_edges;
    for (const GraphEdge* edge : out_edges_[static_cast<std::size_t>(id)]) {
      const GraphNode& child = g_.node(edge->target);
      if (child.kind == NodeKind::Attribute) {
        visit(edge->target);
      } else if (child.kind == NodeKind::Concept &&
                 color_[static_cast<std::size_t>(edge->target)] == 0) {
        visit(edge->target);
      }
      if (!node.is_verb) continue;
      Vec child_embedding;
      if (color_[static_cast<std::size_t>(edge->target)] == 1) {
        // Back edge in a reentrancy cycle: use the child's surface text.
        child_embedding = provider_.embed_sentence(child.label);
      } else {
        child_embedding = base_[static_cast<std::size_t>(edge->target)];
      }
      const std::string* tag =
          frames_ ? frames_->find_role_tag(node.label, edge->role) : nullptr;
      role_edges.push_back(role_edge_embedding(provider_, edge->role, tag ? *tag : "",
                                               child_embedding, hp_));
    }

    const Vec token_embedding = token_concept_embedding(provider_, node, sentence_text_of(id));
    base_[static_cast<std::size_t>(id)] =
        concept_embedding(provider_, node, token_embedding, role_edges, hp_, frames_);
    color_[static_cast<std::size_t>(id)] = 2;
  }

 private:
  const std::string& sentence_text_of(int id) {
    const int sentence = sentence_node_[static_cast<std::size_t>(id)];
    if (sentence < 0) {
      throw std::runtime_error("node " + std::to_string(id) + " has no sentence");
    }
    return g_.node(sentence).label;
  }

  const DocumentGraph& g_;
  EmbeddingProvider& provider_;
  const EmbedHyperParams& hp_;
  const FrameDb* frames_;
  std::vector<Vec>& base_;
  const std::vector<int>& sentence_node_;
  std::vector<std::vector<const GraphEdge*>> out_edges_;
  std::vector<int> color_;
};

}  // namespace

NodeEmbeddings compute_all_embeddings(const DocumentGraph& g, EmbeddingProvider& provider,
                                      const EmbedHyperParams& hp, const FrameDb* frames) {
  g.validate();
  hp.validate();
  NodeEmbeddings result;
  result.base.resize(g.nodes.size());

  const auto out_adj = g.out_adjacency();
  const auto sentence_node = g.sentence_node_of();
  SentenceEmbedder embedder(g, provider, hp, frames, result.base, sentence_node);

  // Concepts and attributes, bottom-up.
  for (const auto& node : g.nodes) {
    if (node.kind == NodeKind::Concept || node.kind == NodeKind::Attribute) {
      embedder.visit(node.id);
    }
  }
  // Sentences.
  for (const auto& node : g.nodes) {
    if (node.kind != NodeKind::Sentence) continue;
    try {
      result.base[static_cast<std::size_t>(node.id)] =
          sentence_embedding(provider, node.label);
    } catch (const std::exception& e) {
      throw std::runtime_error("node " + std::to_string(node.id) + ": " + e.what());
    }
  }
  // Document: mean over child sentences.
  std::vector<Vec> children;
  for (const int child : out_adj[static_cast<std::size_t>(g.root)]) {
    children.push_back(result.base[static_cast<std::size_t>(child)]);
  }
  result.base[static_cast<std::size_t>(g.root)] = document_embedding(children);

  result.neighborhood.resize(g.nodes.size());
  for (const auto& node : g.nodes) {
    result.neighborhood[static_cast<std::size_t>(node.id)] =
        neighborhood_embedding(g, result.base, node.id, hp);
  }
  return result;
}

}  // namespace groundcheck
