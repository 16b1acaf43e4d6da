#include <doctest.h>

#include <cmath>

#include "groundcheck/gnn.hpp"
#include "groundcheck/pipeline.hpp"
#include "helpers.hpp"

using namespace groundcheck;

namespace {

AlignedGraph small_pair() {
  const auto ref_amr = penman::parse("(w / want-01 :ARG0 (b / boy) :polarity -)",
                                     "the boy wants");
  const auto resp_amr = penman::parse("(s / see-01 :ARG0 (g / girl))", "the girl sees");
  return merge_aligned_graph(build_document_graph({ref_amr}, ComponentId::Reference),
                             build_document_graph({resp_amr}, ComponentId::Response),
                             {{2, 2, 0.8, 0.5}, {3, 3, 0.4, 0.0}});
}

Eigen::MatrixXd features_for(const AlignedGraph& g) {
  TestEmbeddingProvider provider(kEmbeddingDim, 11);
  EmbedHyperParams hp;
  const NodeEmbeddings ref = compute_all_embeddings(g.reference, provider, hp);
  const NodeEmbeddings resp = compute_all_embeddings(g.response, provider, hp);
  return assemble_features(g, ref, resp);
}

}  // namespace

TEST_CASE("feature assembly shapes and codes") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  REQUIRE(x.rows() == g.total_nodes());
  REQUIRE(x.cols() == kFeatureDim);

  // Reference rows carry component code 0, response rows 1.
  for (int i = 0; i < g.reference.node_count(); ++i) CHECK(x(i, kEmbeddingDim + 1) == 0.0);
  for (int i = 0; i < g.response.node_count(); ++i) {
    CHECK(x(g.reference.node_count() + i, kEmbeddingDim + 1) == 1.0);
  }
  // Kind codes scaled to [0,1]; concept indicator set exactly for concepts.
  for (const auto& node : g.reference.nodes) {
    CHECK(x(node.id, kEmbeddingDim) ==
          doctest::Approx(static_cast<double>(node.kind) / 3.0));
    CHECK(x(node.id, kEmbeddingDim + 2) == (node.kind == NodeKind::Concept ? 1.0 : 0.0));
  }
}

TEST_CASE("feature assembly wants 768-dim embeddings") {
  const AlignedGraph g = small_pair();
  TestEmbeddingProvider provider(32, 11);
  EmbedHyperParams hp;
  const NodeEmbeddings ref = compute_all_embeddings(g.reference, provider, hp);
  const NodeEmbeddings resp = compute_all_embeddings(g.response, provider, hp);
  CHECK_THROWS(assemble_features(g, ref, resp));
}

TEST_CASE("normalized adjacency") {
  SUBCASE("two nodes with a unit edge") {
    // Hand-checkable case: D = (2,2), all entries 0.5.
    AlignedGraph g;
    g.reference.component = ComponentId::Reference;
    g.response.component = ComponentId::Response;
    GraphNode a;
    a.id = 0;
    a.kind = NodeKind::Document;
    g.reference.nodes = {a};
    GraphNode b = a;
    b.component = ComponentId::Response;
    g.response.nodes = {b};
    g.alignment_edges.push_back({0, 0, 1.0, std::nullopt});
    const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
    REQUIRE(a_hat.rows() == 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) CHECK(a_hat(i, j) == doctest::Approx(0.5));
    }
  }
  SUBCASE("zero-flow edges vanish under flow weighting") {
    const AlignedGraph g = small_pair();
    const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Flow);
    const int u = g.global_ref(3);
    const int v = g.global_resp(3);
    CHECK(a_hat(u, v) == 0.0);  // that edge carries flow 0
    const Eigen::MatrixXd unit = normalize_adjacency(g, EdgeWeighting::Unit);
    CHECK(unit(u, v) > 0.0);
  }
  SUBCASE("rows are symmetric") {
    const AlignedGraph g = small_pair();
    const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
    CHECK((a_hat - a_hat.transpose()).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("forward pass structure") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);

  SUBCASE("all-zero weights produce the head bias") {
    GnnModel model = GnnModel::zeros();
    model.head_b2 = 0.37;
    const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
    CHECK(cache.logit == doctest::Approx(0.37));
  }
  SUBCASE("attention weights are a distribution") {
    Rng rng(5);
    const GnnModel model = GnnModel::glorot_init(rng);
    const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
    CHECK(cache.attn_weights.sum() == doctest::Approx(1.0));
    CHECK(cache.attn_weights.minCoeff() >= 0.0);
  }
  SUBCASE("single-node graph pools to that node") {
    Eigen::MatrixXd x1 = x.row(0);
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Identity(1, 1);
    Rng rng(5);
    const GnnModel model = GnnModel::glorot_init(rng);
    const ForwardCache cache = gcn_forward(x1, a1, model, 0.0, false, nullptr);
    CHECK((cache.pooled.transpose() - cache.h3.row(0)).norm() == doctest::Approx(0.0));
    CHECK(cache.attn_weights(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("sparse hand computation of the logit") {
  // One path through the network: unit x value at column 0 flows through
  // W1[0][0], W2[0][0], W3[0][0], one head unit; everything else zero.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, kFeatureDim);
  x(0, 0) = 2.0;
  Eigen::MatrixXd a_hat = Eigen::MatrixXd::Identity(1, 1);
  GnnModel model = GnnModel::zeros();
  model.w1(0, 0) = 0.5;
  model.w2(0, 0) = -0.25;
  model.b2(0) = 0.4;
  model.w3(0, 0) = 3.0;
  model.head_w1(0, 0) = 0.7;
  model.head_w2(0) = 2.0;
  model.head_b2 = 0.05;

  // h1 = relu(2 * 0.5) = 1; h2 = relu(1 * -0.25 + 0.4) = 0.15;
  // h3 = 0.15 * 3 = 0.45; pooled = 0.45 (softmax over one node);
  // head = relu(0.45 * 0.7) = 0.315; logit = 0.315 * 2 + 0.05 = 0.68.
  const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
  CHECK(cache.logit == doctest::Approx(0.68));
}

TEST_CASE("bce loss") {
  CHECK(bce_loss(0.0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(0.0, 1) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(20.0, 1) < 1e-8);
  CHECK(bce_loss(1.0, 0) == doctest::Approx(1.31326).epsilon(1e-4));
  CHECK_THROWS(bce_loss(0.0, 2));
  SUBCASE("strictly decreasing in the logit for label 1") {
    double prev = bce_loss(-5.0, 1);
    for (double logit = -4.5; logit <= 5.0; logit += 0.5) {
      const double loss = bce_loss(logit, 1);
      CHECK(loss < prev);
      prev = loss;
    }
  }
}

TEST_CASE("analytic gradients match finite differences") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
  Rng rng(123);
  GnnModel model = GnnModel::glorot_init(rng);
  const int label = 1;

  const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
  const GnnParams grads = gcn_backward(cache, model, label);

  const double h = 1e-4;
  auto loss_at = [&]() {
    return bce_loss(gcn_forward(x, a_hat, model, 0.0, false, nullptr).logit, label);
  };

  std::vector<std::pair<double*, Eigen::Index>> tensors;
  model.for_each([&](const char*, double* data, Eigen::Index size) {
    tensors.emplace_back(data, size);
  });
  std::vector<std::pair<const double*, Eigen::Index>> grad_tensors;
  grads.for_each([&](const char*, const double* data, Eigen::Index size) {
    grad_tensors.emplace_back(data, size);
  });

  Rng pick(9);
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const Eigen::Index size = tensors[t].second;
    const int samples = size <= 32 ? static_cast<int>(size) : 24;
    for (int s = 0; s < samples; ++s) {
      const Eigen::Index i =
          size <= 32 ? s : static_cast<Eigen::Index>(pick.bounded(static_cast<std::uint64_t>(size)));
      double* param = tensors[t].first + i;
      const double saved = *param;
      *param = saved + h;
      const double up = loss_at();
      *param = saved - h;
      const double down = loss_at();
      *param = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad_tensors[t].first[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      REQUIRE(std::abs(numeric - analytic) / denom <= 1e-3);
    }
  }
}

TEST_CASE("gradients vanish on a saturated correct prediction") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
  GnnModel model = GnnModel::zeros();
  model.head_b2 = 40.0;  // sigma(logit) == 1 to machine precision
  const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
  const GnnParams grads = gcn_backward(cache, model, 1);
  CHECK(global_grad_norm(grads) < 1e-12);
}

TEST_CASE("dead relu paths get zero gradients") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
  Rng rng(3);
  GnnModel model = GnnModel::glorot_init(rng);
  model.b2.setConstant(-100.0);  // kills h2, so nothing reaches w3
  const ForwardCache cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
  const GnnParams grads = gcn_backward(cache, model, 0);
  CHECK(grads.w3.norm() == 0.0);
  CHECK(grads.w2.norm() == 0.0);
}

TEST_CASE("adamw step") {
  AdamWConfig config;
  config.learning_rate = 1e-3;
  SUBCASE("zero gradient and zero decay is a fixed point") {
    config.weight_decay = 0.0;
    GnnModel model = GnnModel::zeros();
    model.w1(0, 0) = 0.5;
    AdamWState state;
    adamw_step(model, GnnParams::zeros(), state, config);
    CHECK(model.w1(0, 0) == 0.5);
  }
  SUBCASE("zero gradient with decay shrinks multiplicatively") {
    config.weight_decay = 0.1;
    GnnModel model = GnnModel::zeros();
    model.w1(0, 0) = 0.5;
    AdamWState state;
    adamw_step(model, GnnParams::zeros(), state, config);
    CHECK(model.w1(0, 0) == doctest::Approx(0.5 * (1.0 - 1e-3 * 0.1)));
  }
  SUBCASE("first step with unit gradient moves by about the learning rate") {
    config.weight_decay = 0.0;
    GnnModel model = GnnModel::zeros();
    GnnParams grads = GnnParams::zeros();
    grads.w1(0, 0) = 1.0;
    AdamWState state;
    adamw_step(model, grads, state, config);
    CHECK(model.w1(0, 0) == doctest::Approx(-1e-3).epsilon(1e-4));
  }
}

TEST_CASE("global norm clipping") {
  GnnParams grads = GnnParams::zeros();
  grads.w1.setConstant(0.1);
  const double before = global_grad_norm(grads);
  REQUIRE(before > 1.0);
  clip_global_norm(grads, 1.0);
  CHECK(global_grad_norm(grads) <= 1.0 + 1e-9);
  CHECK(global_grad_norm(grads) == doctest::Approx(1.0));
  SUBCASE("small gradients pass through") {
    GnnParams tiny = GnnParams::zeros();
    tiny.b1(0) = 0.5;
    clip_global_norm(tiny, 1.0);
    CHECK(tiny.b1(0) == 0.5);
  }
}

TEST_CASE("permutation invariance of the logit") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
  Rng rng(21);
  const GnnModel model = GnnModel::glorot_init(rng);
  const double base_logit = gcn_forward(x, a_hat, model, 0.0, false, nullptr).logit;

  const ForwardCache base_cache = gcn_forward(x, a_hat, model, 0.0, false, nullptr);
  const int n = static_cast<int>(x.rows());
  Rng perm_rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    perm_rng.shuffle(perm);
    Eigen::MatrixXd px(n, x.cols());
    Eigen::MatrixXd pa(n, n);
    for (int i = 0; i < n; ++i) px.row(perm[static_cast<std::size_t>(i)]) = x.row(i);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        pa(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = a_hat(i, j);
      }
    }
    const ForwardCache cache = gcn_forward(px, pa, model, 0.0, false, nullptr);
    REQUIRE(std::abs(cache.logit - base_logit) <= 1e-9);
    // Node representations permute with the node order.
    for (int i = 0; i < n; ++i) {
      REQUIRE((cache.h1.row(perm[static_cast<std::size_t>(i)]) - base_cache.h1.row(i)).norm() <=
              1e-9);
    }
  }
}

TEST_CASE("predict is a sigmoid with dropout off") {
  const AlignedGraph g = small_pair();
  const Eigen::MatrixXd x = features_for(g);
  const Eigen::MatrixXd a_hat = normalize_adjacency(g, EdgeWeighting::Capacity);
  const GnnModel zero = GnnModel::zeros();
  CHECK(predict(zero, x, a_hat) == doctest::Approx(0.5));  // untrained zero model
  Rng rng(4);
  const GnnModel model = GnnModel::glorot_init(rng);
  const double p = predict(model, x, a_hat);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("glorot init is seed deterministic") {
  Rng a(9), b(9), c(10);
  const GnnModel ma = GnnModel::glorot_init(a);
  const GnnModel mb = GnnModel::glorot_init(b);
  const GnnModel mc = GnnModel::glorot_init(c);
  CHECK((ma.w1 - mb.w1).norm() == 0.0);
  CHECK((ma.w1 - mc.w1).norm() > 0.0);
}
