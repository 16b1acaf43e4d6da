#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "groundcheck/document_graph.hpp"
#include "groundcheck/embedding.hpp"
#include "groundcheck/rng.hpp"

namespace groundcheck {

inline constexpr int kEmbeddingDim = 768;
inline constexpr int kFeatureDim = 771;  // 768 embedding + 3 structural codes
inline constexpr int kHiddenDim = 256;
inline constexpr int kHeadHiddenDim = 128;

/// Per-node features in global node order (reference ids, then response ids):
/// the 768-dim base embedding, then node-kind code (kind/3), component code
/// (0 reference, 1 response), and the concept indicator.
Eigen::MatrixXd assemble_features(const AlignedGraph& g, const NodeEmbeddings& ref_embeddings,
                                  const NodeEmbeddings& resp_embeddings);

enum class EdgeWeighting { Unit, Capacity, Flow };

std::string_view to_string(EdgeWeighting weighting);
EdgeWeighting edge_weighting_from_string(std::string_view s);

/// Symmetric-normalized adjacency D^{-1/2} (A + I) D^{-1/2} over the
/// undirected union of intra-text and alignment edges. Off-diagonal entries
/// carry the chosen edge weight (1, capacity, or solved flow); parallel
/// edges accumulate.
Eigen::MatrixXd normalize_adjacency(const AlignedGraph& g, EdgeWeighting weighting);

/// All trainable tensors. The same layout carries gradients and optimizer
/// moments; for_each visits every tensor in a fixed order.
struct GnnParams {
  Eigen::MatrixXd w1{kFeatureDim, kHiddenDim};
  Eigen::VectorXd b1{kHiddenDim};
  Eigen::MatrixXd w2{kHiddenDim, kHiddenDim};
  Eigen::VectorXd b2{kHiddenDim};
  Eigen::MatrixXd w3{kHiddenDim, kHiddenDim};
  Eigen::VectorXd b3{kHiddenDim};
  Eigen::VectorXd attn_w{kHiddenDim};
  double attn_b = 0.0;
  Eigen::MatrixXd head_w1{kHiddenDim, kHeadHiddenDim};
  Eigen::VectorXd head_b1{kHeadHiddenDim};
  Eigen::VectorXd head_w2{kHeadHiddenDim};
  double head_b2 = 0.0;

  static GnnParams zeros();
  /// Glorot-uniform weights, zero biases; consumes a fixed amount of RNG
  /// state so downstream draws are reproducible.
  static GnnParams glorot_init(Rng& rng);

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("w1", w1.data(), w1.size());
    fn("b1", b1.data(), b1.size());
    fn("w2", w2.data(), w2.size());
    fn("b2", b2.data(), b2.size());
    fn("w3", w3.data(), w3.size());
    fn("b3", b3.data(), b3.size());
    fn("attn_w", attn_w.data(), attn_w.size());
    fn("attn_b", &attn_b, 1);
    fn("head_w1", head_w1.data(), head_w1.size());
    fn("head_b1", head_b1.data(), head_b1.size());
    fn("head_w2", head_w2.data(), head_w2.size());
    fn("head_b2", &head_b2, 1);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<GnnParams*>(this)->for_each(
        [&](const char* name, double* data, Eigen::Index size) {
          fn(name, const_cast<const double*>(data), size);
        });
  }

  void add_scaled(const GnnParams& other, double scale);
  void setZero();
};

using GnnModel = GnnParams;

/// Everything the backward pass needs from a forward evaluation.
struct ForwardCache {
  Eigen::MatrixXd x, a_hat;
  Eigen::MatrixXd ax;                        // a_hat * x
  Eigen::MatrixXd h1pre, h1, ah1;            // pre-activation, post-dropout, a_hat * h1
  Eigen::MatrixXd h2pre, h2, ah2;
  Eigen::MatrixXd h3;
  Eigen::MatrixXd mask1, mask2;              // inverted-dropout masks
  Eigen::VectorXd attn_tanh, attn_weights;   // tanh(scores), softmax weights
  Eigen::VectorXd pooled;
  Eigen::VectorXd head_pre, head_h, mask_head;
  double logit = 0.0;
};

/// Three GCN layers (relu on the first two), tanh-gated attention pooling,
/// and a two-layer head producing one logit. Dropout is applied to the
/// hidden GCN layers and the head's hidden layer only when active.
ForwardCache gcn_forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& a_hat,
                         const GnnModel& model, double dropout, bool dropout_active,
                         Rng* rng);

/// Numerically stable binary cross-entropy on a raw logit.
double bce_loss(double logit, int label);

/// Analytic gradients of bce_loss(gcn_forward(...)) for every parameter.
GnnParams gcn_backward(const ForwardCache& cache, const GnnModel& model, int label);

double global_grad_norm(const GnnParams& grads);

/// Scales all gradients so the global norm is at most max_norm.
void clip_global_norm(GnnParams& grads, double max_norm);

struct AdamWState {
  GnnParams m = GnnParams::zeros();
  GnnParams v = GnnParams::zeros();
  long step = 0;
};

struct AdamWConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Decoupled weight decay plus bias-corrected Adam moments; both terms are
/// computed from the pre-update parameters.
void adamw_step(GnnParams& params, const GnnParams& grads, AdamWState& state,
                const AdamWConfig& config);

/// sigma(logit) with dropout inactive.
double predict(const GnnModel& model, const Eigen::MatrixXd& features,
               const Eigen::MatrixXd& a_hat);

}  // namespace groundcheck
