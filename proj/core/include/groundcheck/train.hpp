#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "groundcheck/gnn.hpp"
#include "groundcheck/metrics.hpp"
#include "groundcheck/rng.hpp"

namespace groundcheck {

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  int batch_size = 32;
  int max_epochs = 50;
  double dropout = 0.2;
  double lr_factor = 0.5;
  int lr_patience = 3;
  int early_stop_patience = 5;
  double early_stop_min_delta = 0.001;
  double grad_clip_norm = 1.0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double threshold = 0.5;  // decision threshold for validation F1

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double learning_rate = 0.0;  // rate used for this epoch's updates
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int stopped_epoch = 0;  // number of epochs actually run
  int best_epoch = 0;     // 1-based epoch of the returned checkpoint
};

/// Plateau learning-rate schedule plus early stopping, factored out so the
/// recipe can be driven by a contrived loss sequence in tests.
///
/// The learning rate halves after `lr_patience` consecutive epochs without
/// strict improvement over the best validation loss. Early stopping fires
/// after `early_stop_patience` consecutive epochs that fail to improve the
/// best loss by at least `early_stop_min_delta`.
class TrainScheduler {
 public:
  explicit TrainScheduler(const TrainConfig& config);

  struct Decision {
    double learning_rate;  // in effect for the next epoch
    bool reduced = false;
    bool stop = false;
    bool new_best = false;  // strict improvement; snapshot the model
  };
  Decision observe(double val_loss);

  double learning_rate() const { return lr_; }

  struct State {
    double lr;
    double best_loss;
    double best_strict_loss;
    int lr_bad_epochs;
    int stop_bad_epochs;
  };
  State state() const;
  void restore(const State& s);

 private:
  double lr_;
  double lr_factor_;
  int lr_patience_;
  int stop_patience_;
  double min_delta_;
  double best_loss_;         // best seen, for early stopping (min-delta)
  double best_strict_loss_;  // best seen, for LR plateau and snapshots
  int lr_bad_epochs_ = 0;
  int stop_bad_epochs_ = 0;
};

struct TrainResult {
  GnnModel model;  // best-validation checkpoint
  TrainHistory history;
};

struct TrainOptions {
  /// Test seam: maps (epoch, computed validation loss) to the loss the
  /// scheduler sees. Never used by production callers.
  std::function<double(int, double)> val_loss_override;
  std::function<void(int, const EpochStats&)> progress;
};

/// Mini-batch training per the fixed recipe: seeded shuffles, mean batch
/// loss, global-norm clipping, AdamW, plateau LR schedule, early stopping.
/// Deterministic for identical (data, config): bit-identical history and
/// model across runs.
TrainResult train(const std::vector<GraphInstance>& train_set,
                  const std::vector<GraphInstance>& val_set, const TrainConfig& config,
                  const TrainOptions& options = {});

/// Versioned checkpoint container: config echo, parameter tensors, optimizer
/// state, RNG state, scheduler state, and epoch counter. Reloading resumes
/// training bit-identically.
struct Checkpoint {
  int format_version = 1;
  std::string config_hash;
  TrainConfig config;
  int epoch = 0;
  GnnModel params;
  AdamWState opt;
  std::string rng_state;
  TrainScheduler::State scheduler{};
  GnnModel best_params;
  int best_epoch = 0;
  TrainHistory history;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Resumable variant: continues from a checkpoint's epoch counter, RNG, and
/// optimizer state. `resume` may be nullptr for a fresh run.
TrainResult train_resumable(const std::vector<GraphInstance>& train_set,
                            const std::vector<GraphInstance>& val_set,
                            const TrainConfig& config, const Checkpoint* resume,
                            Checkpoint* out_checkpoint,
                            const TrainOptions& options = {});

}  // namespace groundcheck
