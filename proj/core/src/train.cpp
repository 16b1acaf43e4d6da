#include "groundcheck/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace groundcheck {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be > 0");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0,1)");
  if (!(lr_factor > 0.0 && lr_factor <= 1.0)) {
    throw std::invalid_argument("lr_factor must lie in (0,1]");
  }
  if (lr_patience <= 0 || early_stop_patience <= 0) {
    throw std::invalid_argument("patience values must be > 0");
  }
  if (early_stop_min_delta < 0.0) throw std::invalid_argument("min delta must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("grad_clip_norm must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in (0,1)");
  }
}

TrainScheduler::TrainScheduler(const TrainConfig& config)
    : lr_(config.learning_rate),
      lr_factor_(config.lr_factor),
      lr_patience_(config.lr_patience),
      stop_patience_(config.early_stop_patience),
      min_delta_(config.early_stop_min_delta),
      best_loss_(std::numeric_limits<double>::infinity()),
      best_strict_loss_(std::numeric_limits<double>::infinity()) {}

TrainScheduler::Decision TrainScheduler::observe(double val_loss) {
  Decision d{lr_, false, false, false};

  // Plateau schedule: strict improvement resets the counter.
  if (val_loss < best_strict_loss_) {
    lr_bad_epochs_ = 0;
    d.new_best = true;
    best_strict_loss_ = val_loss;
  } else {
    ++lr_bad_epochs_;
    if (lr_bad_epochs_ >= lr_patience_) {
      lr_ *= lr_factor_;
      lr_bad_epochs_ = 0;
      d.reduced = true;
    }
  }

  // Early stopping: improvement must beat the best by min_delta.
  if (val_loss < best_loss_ - min_delta_) {
    best_loss_ = val_loss;
    stop_bad_epochs_ = 0;
  } else {
    ++stop_bad_epochs_;
    if (stop_bad_epochs_ >= stop_patience_) d.stop = true;
  }

  d.learning_rate = lr_;
  return d;
}

TrainScheduler::State TrainScheduler::state() const {
  return {lr_, best_loss_, best_strict_loss_, lr_bad_epochs_, stop_bad_epochs_};
}

void TrainScheduler::restore(const State& s) {
  lr_ = s.lr;
  best_loss_ = s.best_loss;
  best_strict_loss_ = s.best_strict_loss;
  lr_bad_epochs_ = s.lr_bad_epochs;
  stop_bad_epochs_ = s.stop_bad_epochs;
}

TrainResult train_resumable(const std::vector<GraphInstance>& train_set,
                            const std::vector<GraphInstance>& val_set,
                            const TrainConfig& config, const Checkpoint* resume,
                            Checkpoint* out_checkpoint, const TrainOptions& options) {
  config.validate();
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: empty split");
  }

  Rng rng(config.seed);
  GnnModel model = GnnModel::zeros();
  GnnModel best_model = GnnModel::zeros();
  AdamWState opt;
  TrainScheduler scheduler(config);
  TrainHistory history;
  int best_epoch = 0;
  int start_epoch = 0;

  if (resume) {
    model = resume->params;
    best_model = resume->best_params;
    opt = resume->opt;
    rng.load_state(resume->rng_state);
    scheduler.restore(resume->scheduler);
    history = resume->history;
    best_epoch = resume->best_epoch;
    start_epoch = resume->epoch;
  } else {
    model = GnnModel::glorot_init(rng);
    best_model = model;
  }

  AdamWConfig adam;
  adam.weight_decay = config.weight_decay;
  adam.beta1 = config.adam_beta1;
  adam.beta2 = config.adam_beta2;
  adam.epsilon = config.adam_epsilon;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  GnnParams grads = GnnParams::zeros();
  int epoch = start_epoch;
  bool stopped = false;

  while (epoch < config.max_epochs && !stopped) {
    ++epoch;
    const double lr_for_epoch = scheduler.learning_rate();
    adam.learning_rate = lr_for_epoch;

    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(end - begin);
      grads.setZero();
      for (std::size_t i = begin; i < end; ++i) {
        const GraphInstance& instance = train_set[order[i]];
        const ForwardCache cache = gcn_forward(instance.features, instance.adjacency, model,
                                               config.dropout, config.dropout > 0.0, &rng);
        loss_sum += bce_loss(cache.logit, instance.label);
        const GnnParams g = gcn_backward(cache, model, instance.label);
        grads.add_scaled(g, inv);
      }
      clip_global_norm(grads, config.grad_clip_norm);
      adamw_step(model, grads, opt, adam);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.learning_rate = lr_for_epoch;

    double val_loss = 0.0;
    std::vector<double> probabilities;
    std::vector<int> labels;
    probabilities.reserve(val_set.size());
    for (const auto& instance : val_set) {
      const ForwardCache cache =
          gcn_forward(instance.features, instance.adjacency, model, 0.0, false, nullptr);
      val_loss += bce_loss(cache.logit, instance.label);
      probabilities.push_back(1.0 / (1.0 + std::exp(-cache.logit)));
      labels.push_back(instance.label);
    }
    val_loss /= static_cast<double>(val_set.size());
    if (options.val_loss_override) {
      val_loss = options.val_loss_override(epoch, val_loss);
    }
    stats.val_loss = val_loss;
    stats.val_f1 = evaluate(probabilities, labels, config.threshold).f1;

    const TrainScheduler::Decision decision = scheduler.observe(val_loss);
    if (decision.new_best) {
      best_model = model;
      best_epoch = epoch;
    }
    history.epochs.push_back(stats);
    if (options.progress) options.progress(epoch, stats);
    if (decision.stop) stopped = true;
  }

  history.stopped_epoch = epoch;
  history.best_epoch = best_epoch;

  if (out_checkpoint) {
    out_checkpoint->config = config;
    out_checkpoint->epoch = epoch;
    out_checkpoint->params = model;
    out_checkpoint->opt = opt;
    out_checkpoint->rng_state = rng.save_state();
    out_checkpoint->scheduler = scheduler.state();
    out_checkpoint->best_params = best_model;
    out_checkpoint->best_epoch = best_epoch;
    out_checkpoint->history = history;
  }

  TrainResult result;
  result.model = std::move(best_model);
  result.history = std::move(history);
  return result;
}

TrainResult train(const std::vector<GraphInstance>& train_set,
                  const std::vector<GraphInstance>& val_set, const TrainConfig& config,
                  const TrainOptions& options) {
  return train_resumable(train_set, val_set, config, nullptr, nullptr, options);
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw std::runtime_error("checkpoint tensor shape mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::runtime_error("checkpoint tensor size mismatch");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size) {
  if (static_cast<Eigen::Index>(j.size()) != size) {
    throw std::runtime_error("checkpoint vector size mismatch");
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json params_to_json(const GnnParams& p) {
  json j;
  j["w1"] = matrix_to_json(p.w1);
  j["b1"] = vector_to_json(p.b1);
  j["w2"] = matrix_to_json(p.w2);
  j["b2"] = vector_to_json(p.b2);
  j["w3"] = matrix_to_json(p.w3);
  j["b3"] = vector_to_json(p.b3);
  j["attn_w"] = vector_to_json(p.attn_w);
  j["attn_b"] = p.attn_b;
  j["head_w1"] = matrix_to_json(p.head_w1);
  j["head_b1"] = vector_to_json(p.head_b1);
  j["head_w2"] = vector_to_json(p.head_w2);
  j["head_b2"] = p.head_b2;
  return j;
}

GnnParams params_from_json(const json& j) {
  GnnParams p;
  p.w1 = matrix_from_json(j.at("w1"), kFeatureDim, kHiddenDim);
  p.b1 = vector_from_json(j.at("b1"), kHiddenDim);
  p.w2 = matrix_from_json(j.at("w2"), kHiddenDim, kHiddenDim);
  p.b2 = vector_from_json(j.at("b2"), kHiddenDim);
  p.w3 = matrix_from_json(j.at("w3"), kHiddenDim, kHiddenDim);
  p.b3 = vector_from_json(j.at("b3"), kHiddenDim);
  p.attn_w = vector_from_json(j.at("attn_w"), kHiddenDim);
  p.attn_b = j.at("attn_b").get<double>();
  p.head_w1 = matrix_from_json(j.at("head_w1"), kHiddenDim, kHeadHiddenDim);
  p.head_b1 = vector_from_json(j.at("head_b1"), kHeadHiddenDim);
  p.head_w2 = vector_from_json(j.at("head_w2"), kHeadHiddenDim);
  p.head_b2 = j.at("head_b2").get<double>();
  return p;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["dropout"] = c.dropout;
  j["lr_factor"] = c.lr_factor;
  j["lr_patience"] = c.lr_patience;
  j["early_stop_patience"] = c.early_stop_patience;
  j["early_stop_min_delta"] = c.early_stop_min_delta;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["seed"] = c.seed;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["threshold"] = c.threshold;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.lr_factor = j.at("lr_factor").get<double>();
  c.lr_patience = j.at("lr_patience").get<int>();
  c.early_stop_patience = j.at("early_stop_patience").get<int>();
  c.early_stop_min_delta = j.at("early_stop_min_delta").get<double>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.threshold = j.at("threshold").get<double>();
  return c;
}

json history_to_json(const TrainHistory& h) {
  json j;
  j["stopped_epoch"] = h.stopped_epoch;
  j["best_epoch"] = h.best_epoch;
  j["epochs"] = json::array();
  for (const auto& e : h.epochs) {
    j["epochs"].push_back({{"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"val_f1", e.val_f1},
                           {"learning_rate", e.learning_rate}});
  }
  return j;
}

TrainHistory history_from_json(const json& j) {
  TrainHistory h;
  h.stopped_epoch = j.at("stopped_epoch").get<int>();
  h.best_epoch = j.at("best_epoch").get<int>();
  for (const auto& e : j.at("epochs")) {
    h.epochs.push_back({e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                        e.at("val_f1").get<double>(), e.at("learning_rate").get<double>()});
  }
  return h;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  json j;
  j["format_version"] = checkpoint.format_version;
  j["config_hash"] = checkpoint.config_hash;
  j["train_config"] = train_config_to_json(checkpoint.config);
  j["epoch"] = checkpoint.epoch;
  j["params"] = params_to_json(checkpoint.params);
  j["opt"] = {{"step", checkpoint.opt.step},
              {"m", params_to_json(checkpoint.opt.m)},
              {"v", params_to_json(checkpoint.opt.v)}};
  j["rng_state"] = checkpoint.rng_state;
  j["scheduler"] = {{"lr", checkpoint.scheduler.lr},
                    {"best_loss", checkpoint.scheduler.best_loss},
                    {"best_strict_loss", checkpoint.scheduler.best_strict_loss},
                    {"lr_bad_epochs", checkpoint.scheduler.lr_bad_epochs},
                    {"stop_bad_epochs", checkpoint.scheduler.stop_bad_epochs}};
  j["best_params"] = params_to_json(checkpoint.best_params);
  j["best_epoch"] = checkpoint.best_epoch;
  j["history"] = history_to_json(checkpoint.history);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << j.dump();
  out << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  json j = json::parse(in);
  Checkpoint c;
  c.format_version = j.at("format_version").get<int>();
  if (c.format_version != 1) {
    throw std::runtime_error("unsupported checkpoint format_version " +
                             std::to_string(c.format_version));
  }
  c.config_hash = j.at("config_hash").get<std::string>();
  c.config = train_config_from_json(j.at("train_config"));
  c.epoch = j.at("epoch").get<int>();
  c.params = params_from_json(j.at("params"));
  c.opt.step = j.at("opt").at("step").get<long>();
  c.opt.m = params_from_json(j.at("opt").at("m"));
  c.opt.v = params_from_json(j.at("opt").at("v"));
  c.rng_state = j.at("rng_state").get<std::string>();
  const auto& s = j.at("scheduler");
  c.scheduler = {s.at("lr").get<double>(), s.at("best_loss").get<double>(),
                 s.at("best_strict_loss").get<double>(), s.at("lr_bad_epochs").get<int>(),
                 s.at("stop_bad_epochs").get<int>()};
  c.best_params = params_from_json(j.at("best_params"));
  c.best_epoch = j.at("best_epoch").get<int>();
  c.history = history_from_json(j.at("history"));
  return c;
}

}  // namespace groundcheck
