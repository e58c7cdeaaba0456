#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sensecast/model.hpp"

namespace sensecast {

struct TrainConfig {
  double lr_base = 1e-3;
  int warmup_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t trunc_len = 32;
  int batches_per_epoch = 20;
  int patience = 5;
  int max_epochs = 200;
  std::uint64_t seed = 1;
  double l2_logistic = 1e-4;
  int logistic_max_iters = 10000;
  double logistic_grad_tol = 1e-6;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_auc;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 1-based; 0 = never improved
  double best_val_auc = 0.0;
};

std::string train_log_to_csv(const TrainLog& log);

struct AdamState {
  Vec m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard bias-corrected Adam update with a linear learning-rate warmup:
// effective lr = lr_base * min(1, step_index / warmup_steps).
void adam_step(Vec& params, const Vec& grads, AdamState& state, int step_index,
               const TrainConfig& cfg);

// One player's normalized input sequence plus targets, ready for the network.
struct PlayerSequence {
  std::string player_id;
  std::vector<Vec> x;
  std::vector<double> y;
  std::vector<std::uint8_t> valid;
};

// Epochs of `batches_per_epoch` single-player full-sequence batches drawn
// uniformly with replacement from the train set; early stopping on the
// validation mean per-player ROC AUC; returns the best-epoch parameters.
GruAttentionModel train_network(const GruAttentionConfig& net_cfg,
                                const std::vector<PlayerSequence>& train,
                                const std::vector<PlayerSequence>& val, const TrainConfig& cfg,
                                TrainLog* log = nullptr);

// Full-batch gradient descent on the L2-regularized cross-entropy, fixed step
// from a Lipschitz bound, stopping at gradient norm < tol or the iteration
// cap. The problem is convex, so the result is the unique optimum.
LogisticModel train_logistic(const std::vector<PlayerSequence>& train, const TrainConfig& cfg,
                             double* final_grad_norm = nullptr);

}  // namespace sensecast
