#include "groundcheck/gnn.hpp"

#include <cmath>
#include <stdexcept>

namespace groundcheck {

std::string_view to_string(EdgeWeighting weighting) {
  switch (weighting) {
    case EdgeWeighting::Unit: return "unit";
    case EdgeWeighting::Capacity: return "capacity";
    case EdgeWeighting::Flow: return "flow";
  }
  return "flow";
}

EdgeWeighting edge_weighting_from_string(std::string_view s) {
  if (s == "unit") return EdgeWeighting::Unit;
  if (s == "capacity") return EdgeWeighting::Capacity;
  if (s == "flow") return EdgeWeighting::Flow;
  throw std::invalid_argument("unknown edge weighting '" + std::string(s) + "'");
}

Eigen::MatrixXd assemble_features(const AlignedGraph& g, const NodeEmbeddings& ref_embeddings,
                                  const NodeEmbeddings& resp_embeddings) {
  const int total = g.total_nodes();
  Eigen::MatrixXd features(total, kFeatureDim);

  auto fill = [&](const DocumentGraph& doc, const NodeEmbeddings& embeddings, int offset,
                  double component_code) {
    for (const auto& node : doc.nodes) {
      const auto& base = embeddings.base[static_cast<std::size_t>(node.id)];
      if (static_cast<int>(base.size()) != kEmbeddingDim) {
        throw std::invalid_argument(
            "feature assembly requires " + std::to_string(kEmbeddingDim) +
            "-dim embeddings, got " + std::to_string(base.size()));
      }
      const int row = offset + node.id;
      for (int i = 0; i < kEmbeddingDim; ++i) features(row, i) = base[static_cast<std::size_t>(i)];
      features(row, kEmbeddingDim) = static_cast<double>(node.kind) / 3.0;
      features(row, kEmbeddingDim + 1) = component_code;
      features(row, kEmbeddingDim + 2) = node.kind == NodeKind::Concept ? 1.0 : 0.0;
    }
  };
  fill(g.reference, ref_embeddings, 0, 0.0);
  fill(g.response, resp_embeddings, g.reference.node_count(), 1.0);
  return features;
}

Eigen::MatrixXd normalize_adjacency(const AlignedGraph& g, EdgeWeighting weighting) {
  const int total = g.total_nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(total, total);

  auto add_undirected = [&](int u, int v, double w) {
    if (u == v) return;
    a(u, v) += w;
    a(v, u) += w;
  };
  for (const auto& edge : g.reference.edges) {
    add_undirected(g.global_ref(edge.source), g.global_ref(edge.target), 1.0);
  }
  for (const auto& edge : g.response.edges) {
    add_undirected(g.global_resp(edge.source), g.global_resp(edge.target), 1.0);
  }
  for (const auto& edge : g.alignment_edges) {
    double w = 1.0;
    if (weighting == EdgeWeighting::Capacity) {
      w = edge.capacity;
    } else if (weighting == EdgeWeighting::Flow) {
      w = edge.flow.value_or(0.0);
    }
    add_undirected(g.global_ref(edge.ref_node), g.global_resp(edge.resp_node), w);
  }

  a += Eigen::MatrixXd::Identity(total, total);
  Eigen::VectorXd degree = a.rowwise().sum();
  Eigen::VectorXd inv_sqrt(total);
  for (int i = 0; i < total; ++i) {
    inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

GnnParams GnnParams::zeros() {
  GnnParams p;
  p.setZero();
  return p;
}

void GnnParams::setZero() {
  for_each([](const char*, double* data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) data[i] = 0.0;
  });
}

void GnnParams::add_scaled(const GnnParams& other, double scale) {
  auto* self = this;
  std::vector<std::pair<const double*, Eigen::Index>> src;
  other.for_each([&](const char*, const double* data, Eigen::Index size) {
    src.emplace_back(data, size);
  });
  std::size_t tensor = 0;
  self->for_each([&](const char*, double* data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) data[i] += scale * src[tensor].first[i];
    ++tensor;
  });
}

namespace {

void glorot_fill(Eigen::Ref<Eigen::MatrixXd> m, Eigen::Index fan_in, Eigen::Index fan_out,
                 Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  // Row-major fill order, independent of Eigen's storage layout.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
  }
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double dropout, Rng& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep = 1.0 - dropout;
  const double scale = 1.0 / keep;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      mask(r, c) = rng.uniform() < dropout ? 0.0 : scale;
    }
  }
  return mask;
}

void require_finite(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("non-finite values at layer ") + layer);
  }
}

}  // namespace

GnnParams GnnParams::glorot_init(Rng& rng) {
  GnnParams p = GnnParams::zeros();
  glorot_fill(p.w1, kFeatureDim, kHiddenDim, rng);
  glorot_fill(p.w2, kHiddenDim, kHiddenDim, rng);
  glorot_fill(p.w3, kHiddenDim, kHiddenDim, rng);
  glorot_fill(p.attn_w, kHiddenDim, 1, rng);
  glorot_fill(p.head_w1, kHiddenDim, kHeadHiddenDim, rng);
  glorot_fill(p.head_w2, kHeadHiddenDim, 1, rng);
  return p;
}

ForwardCache gcn_forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& a_hat,
                         const GnnModel& model, double dropout, bool dropout_active,
                         Rng* rng) {
  const Eigen::Index n = features.rows();
  if (features.cols() != kFeatureDim) {
    throw std::invalid_argument("features must have " + std::to_string(kFeatureDim) +
                                " columns");
  }
  if (a_hat.rows() != n || a_hat.cols() != n) {
    throw std::invalid_argument("adjacency shape does not match features");
  }
  if (dropout_active && (rng == nullptr || dropout < 0.0 || dropout >= 1.0)) {
    throw std::invalid_argument("active dropout requires an rng and dropout in [0,1)");
  }

  ForwardCache cache;
  cache.x = features;
  cache.a_hat = a_hat;

  cache.ax = a_hat * features;
  cache.h1pre = cache.ax * model.w1;
  cache.h1pre.rowwise() += model.b1.transpose();
  require_finite(cache.h1pre, "gcn1");
  cache.h1 = cache.h1pre.cwiseMax(0.0);
  if (dropout_active) {
    cache.mask1 = dropout_mask(n, kHiddenDim, dropout, *rng);
    cache.h1 = cache.h1.cwiseProduct(cache.mask1);
  }

  cache.ah1 = a_hat * cache.h1;
  cache.h2pre = cache.ah1 * model.w2;
  cache.h2pre.rowwise() += model.b2.transpose();
  require_finite(cache.h2pre, "gcn2");
  cache.h2 = cache.h2pre.cwiseMax(0.0);
  if (dropout_active) {
    cache.mask2 = dropout_mask(n, kHiddenDim, dropout, *rng);
    cache.h2 = cache.h2.cwiseProduct(cache.mask2);
  }

  cache.ah2 = a_hat * cache.h2;
  cache.h3 = cache.ah2 * model.w3;
  cache.h3.rowwise() += model.b3.transpose();
  require_finite(cache.h3, "gcn3");

  // Attention pooling: softmax over tanh-gated per-node scores.
  Eigen::VectorXd scores = cache.h3 * model.attn_w;
  scores.array() += model.attn_b;
  cache.attn_tanh = scores.array().tanh();
  const double max_score = cache.attn_tanh.maxCoeff();
  Eigen::VectorXd exp_scores = (cache.attn_tanh.array() - max_score).exp();
  cache.attn_weights = exp_scores / exp_scores.sum();
  cache.pooled = cache.h3.transpose() * cache.attn_weights;

  cache.head_pre = model.head_w1.transpose() * cache.pooled + model.head_b1;
  require_finite(cache.head_pre, "head1");
  cache.head_h = cache.head_pre.cwiseMax(0.0);
  if (dropout_active) {
    cache.mask_head = dropout_mask(kHeadHiddenDim, 1, dropout, *rng);
    cache.head_h = cache.head_h.cwiseProduct(cache.mask_head);
  }
  cache.logit = model.head_w2.dot(cache.head_h) + model.head_b2;
  if (!std::isfinite(cache.logit)) {
    throw std::runtime_error("non-finite values at layer logit");
  }
  return cache;
}

double bce_loss(double logit, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  const double z = static_cast<double>(label);
  // max(l,0) - l*z + log(1 + exp(-|l|))
  return std::max(logit, 0.0) - logit * z + std::log1p(std::exp(-std::abs(logit)));
}

GnnParams gcn_backward(const ForwardCache& cache, const GnnModel& model, int label) {
  const bool dropped = cache.mask1.size() > 0;
  GnnParams g = GnnParams::zeros();

  const double sigma = 1.0 / (1.0 + std::exp(-cache.logit));
  const double dlogit = sigma - static_cast<double>(label);

  // Head.
  g.head_w2 = cache.head_h * dlogit;
  g.head_b2 = dlogit;
  Eigen::VectorXd dhead_h = model.head_w2 * dlogit;
  if (dropped) dhead_h = dhead_h.cwiseProduct(cache.mask_head);
  Eigen::VectorXd dhead_pre =
      (cache.head_pre.array() > 0.0).select(dhead_h.array(), 0.0);
  g.head_w1 = cache.pooled * dhead_pre.transpose();
  g.head_b1 = dhead_pre;
  Eigen::VectorXd dpooled = model.head_w1 * dhead_pre;

  // Attention pooling. pooled = sum_i alpha_i h3_i.
  Eigen::MatrixXd dh3 = cache.attn_weights * dpooled.transpose();
  Eigen::VectorXd dalpha = cache.h3 * dpooled;
  const double weighted = cache.attn_weights.dot(dalpha);
  Eigen::VectorXd du = cache.attn_weights.cwiseProduct((dalpha.array() - weighted).matrix());
  Eigen::VectorXd dscore =
      du.cwiseProduct((1.0 - cache.attn_tanh.array().square()).matrix());
  dh3 += dscore * model.attn_w.transpose();
  g.attn_w = cache.h3.transpose() * dscore;
  g.attn_b = dscore.sum();

  // Layer 3 (no activation).
  g.w3 = cache.ah2.transpose() * dh3;
  g.b3 = dh3.colwise().sum();
  Eigen::MatrixXd dh2 = cache.a_hat.transpose() * (dh3 * model.w3.transpose());
  if (dropped) dh2 = dh2.cwiseProduct(cache.mask2);
  dh2 = (cache.h2pre.array() > 0.0).select(dh2.array(), 0.0);

  // Layer 2.
  g.w2 = cache.ah1.transpose() * dh2;
  g.b2 = dh2.colwise().sum();
  Eigen::MatrixXd dh1 = cache.a_hat.transpose() * (dh2 * model.w2.transpose());
  if (dropped) dh1 = dh1.cwiseProduct(cache.mask1);
  dh1 = (cache.h1pre.array() > 0.0).select(dh1.array(), 0.0);

  // Layer 1.
  g.w1 = cache.ax.transpose() * dh1;
  g.b1 = dh1.colwise().sum();

  return g;
}

double global_grad_norm(const GnnParams& grads) {
  double sum = 0.0;
  grads.for_each([&](const char*, const double* data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) sum += data[i] * data[i];
  });
  return std::sqrt(sum);
}

void clip_global_norm(GnnParams& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  grads.for_each([&](const char*, double* data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) data[i] *= scale;
  });
}

void adamw_step(GnnParams& params, const GnnParams& grads, AdamWState& state,
                const AdamWConfig& config) {
  state.step += 1;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

  std::vector<std::pair<const double*, Eigen::Index>> grad_ptrs;
  grads.for_each([&](const char*, const double* data, Eigen::Index size) {
    grad_ptrs.emplace_back(data, size);
  });
  std::vector<double*> m_ptrs, v_ptrs;
  state.m.for_each([&](const char*, double* data, Eigen::Index) { m_ptrs.push_back(data); });
  state.v.for_each([&](const char*, double* data, Eigen::Index) { v_ptrs.push_back(data); });

  std::size_t tensor = 0;
  params.for_each([&](const char*, double* p, Eigen::Index size) {
    const double* grad = grad_ptrs[tensor].first;
    double* m = m_ptrs[tensor];
    double* v = v_ptrs[tensor];
    for (Eigen::Index i = 0; i < size; ++i) {
      const double g = grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      // Decoupled decay: both terms use the pre-update parameter.
      p[i] -= config.learning_rate *
              (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * p[i]);
    }
    ++tensor;
  });
}

double predict(const GnnModel& model, const Eigen::MatrixXd& features,
               const Eigen::MatrixXd& a_hat) {
  const ForwardCache cache = gcn_forward(features, a_hat, model, 0.0, false, nullptr);
  return 1.0 / (1.0 + std::exp(-cache.logit));
}

}  // namespace groundcheck
