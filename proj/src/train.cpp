#include "sensecast/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"
#include "sensecast/eval.hpp"
#include "sensecast/rng.hpp"

namespace sensecast {

void TrainConfig::validate() const {
  if (!(lr_base > 0) || warmup_steps <= 0 || !(beta1 > 0 && beta1 < 1) ||
      !(beta2 > 0 && beta2 < 1) || !(eps > 0) || trunc_len < 1 || batches_per_epoch <= 0 ||
      max_epochs <= 0 || !(l2_logistic >= 0) || logistic_max_iters <= 0 ||
      !(logistic_grad_tol > 0)) {
    throw ConfigError("train config fields must be positive");
  }
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

std::string train_log_to_csv(const TrainLog& log) {
  std::string out = "epoch,train_loss,val_auc,lr\n";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch);
    out += ',';
    out += format_double(e.train_loss);
    out += ',';
    if (e.val_auc) out += format_double(*e.val_auc);
    out += ',';
    out += format_double(e.lr);
    out += '\n';
  }
  return out;
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, int step_index,
               const TrainConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    throw ConfigError("adam: size mismatch");
  }
  if (step_index < 1) throw ConfigError("adam: step_index must be >= 1");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericalError("adam: non-finite gradient");
  }
  const double lr = cfg.lr_base *
                    std::min(1.0, static_cast<double>(step_index) / static_cast<double>(cfg.warmup_steps));
  const double bc1 = 1.0 - std::pow(cfg.beta1, step_index);
  const double bc2 = 1.0 - std::pow(cfg.beta2, step_index);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

GruAttentionModel train_network(const GruAttentionConfig& net_cfg,
                                const std::vector<PlayerSequence>& train,
                                const std::vector<PlayerSequence>& val, const TrainConfig& cfg,
                                TrainLog* log) {
  cfg.validate();
  if (train.empty()) throw ConfigError("train set is empty");
  if (val.empty()) throw ConfigError("validation set is empty");

  Rng rng(cfg.seed);
  GruAttentionModel model = GruAttentionModel::init(net_cfg, rng);
  Vec params = model.flatten();
  AdamState state(params.size());

  Vec best_params = params;
  double best_auc = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  int step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      const auto& seq = train[rng.uniform_int(train.size())];
      BackwardResult bw = network_backward(model, seq.x, seq.y, seq.valid, cfg.trunc_len);
      loss_sum += bw.loss;
      ++step;
      adam_step(params, bw.grads.flatten(), state, step, cfg);
      model.unflatten(params);
    }

    std::vector<PlayerScores> scores;
    for (const auto& seq : val) {
      ForwardResult fw = network_forward(model, seq.x);
      PlayerScores ps;
      ps.player_id = seq.player_id;
      for (std::size_t t = 0; t < seq.x.size(); ++t) {
        if (!seq.valid[t]) continue;
        ps.labels.push_back(static_cast<int>(seq.y[t]));
        ps.scores.push_back(fw.yhat[t]);
      }
      scores.push_back(std::move(ps));
    }
    std::optional<double> val_auc;
    try {
      val_auc = per_player_mean_auc(scores).mean_auc;
    } catch (const MetricUndefined&) {
    }

    if (log) {
      const double lr = cfg.lr_base *
                        std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.warmup_steps));
      log->epochs.push_back(
          {epoch, loss_sum / static_cast<double>(cfg.batches_per_epoch), val_auc, lr});
    }

    if (val_auc && *val_auc > best_auc) {
      best_auc = *val_auc;
      best_params = params;
      best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }

  if (log) {
    log->best_epoch = best_epoch;
    log->best_val_auc = best_epoch > 0 ? best_auc : 0.0;
  }
  model.unflatten(best_params);
  return model;
}

LogisticModel train_logistic(const std::vector<PlayerSequence>& train, const TrainConfig& cfg,
                             double* final_grad_norm) {
  cfg.validate();
  std::vector<Vec> xs;
  std::vector<double> ys;
  std::size_t width = 0;
  for (const auto& seq : train) {
    for (std::size_t t = 0; t < seq.x.size(); ++t) {
      if (!seq.valid[t]) continue;
      xs.push_back(seq.x[t]);
      ys.push_back(seq.y[t]);
      width = seq.x[t].size();
    }
  }
  if (xs.empty()) throw ConfigError("logistic training: no valid labeled bins");

  // Fixed step from the smoothness bound of the regularized cross-entropy:
  // hess <= 0.25 * mean|[x,1]|^2 + l2.
  double avg_sq = 0.0;
  for (const auto& x : xs) {
    double s = 1.0;
    for (double v : x) s += v * v;
    avg_sq += s;
  }
  avg_sq /= static_cast<double>(xs.size());
  const double lr = 1.0 / (0.25 * avg_sq + cfg.l2_logistic);

  LogisticModel model(width);
  LogisticModel grad(width);
  double gnorm = 0.0;
  for (int it = 0; it < cfg.logistic_max_iters; ++it) {
    logistic_loss_grad(model, xs, ys, cfg.l2_logistic, &grad);
    double sq = grad.b * grad.b;
    for (double g : grad.w) sq += g * g;
    gnorm = std::sqrt(sq);
    if (gnorm < cfg.logistic_grad_tol) break;
    for (std::size_t j = 0; j < model.w.size(); ++j) model.w[j] -= lr * grad.w[j];
    model.b -= lr * grad.b;
  }
  if (final_grad_norm) *final_grad_norm = gnorm;
  return model;
}

}  // namespace sensecast
