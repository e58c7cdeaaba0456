#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensecast/channels.hpp"
#include "sensecast/ingest.hpp"
#include "sensecast/rng.hpp"

namespace sensecast {

using Vec = std::vector<double>;

// Row-major dense matrix, double precision.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

double sigmoid(double u);

// Named view of one parameter tensor, used by the optimizer, the gradient
// check, and serialization. Enumeration order is fixed.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  double* data = nullptr;
  std::size_t size = 0;
};

// Per-column normalization statistics, computed on the train set only.
// Degenerate columns (zero variance) get stddev 1 so they pass through as 0.
struct NormStats {
  Vec mean, stddev;

  void apply(const double* raw, Vec& out) const;
  Vec apply(const double* raw) const;
};

// sigmoid(<w, x> + b) over the normalized feature vector.
struct LogisticModel {
  Vec w;
  double b = 0.0;

  explicit LogisticModel(std::size_t n = kNumChannels) : w(n, 0.0) {}
  double forward(std::span<const double> x) const;
  std::vector<TensorView> tensors();
  Vec flatten() const;
  void unflatten(std::span<const double> flat);
};

// Mean L2-regularized cross-entropy over a labeled set, with gradient.
// The regularizer (l2/2)*|w|^2 does not touch the bias.
double logistic_loss_grad(const LogisticModel& model, const std::vector<Vec>& xs,
                          const std::vector<double>& ys, double l2, LogisticModel* grad);

// Trailing-window kills proportion as a probability; 0.5 when the window is
// undefined (cold start carries no information under a balanced target).
double baseline_predict(const std::vector<GameEvent>& events, std::int64_t t_ms,
                        std::int64_t tau_ms);

struct GruAttentionConfig {
  std::vector<std::size_t> group_sizes{6, 6, 3};
  std::size_t encoder_width = 4;  // units per group encoder
  std::size_t hidden_width = 8;
  std::size_t head_width = 8;
  bool use_attention = true;

  std::size_t n_groups() const { return group_sizes.size(); }
  std::size_t input_width() const;
  std::size_t encoded_width() const { return encoder_width * n_groups(); }
};

// Grouped dense encoders -> per-group input attention -> GRU -> feed-forward
// head with a sigmoid output.
struct GruAttentionModel {
  GruAttentionConfig cfg;

  std::vector<Mat> enc_w;  // per group: encoder_width x group_size
  std::vector<Vec> enc_b;
  Mat attn_w;              // n_groups x (hidden_width + input_width)
  Vec attn_b;
  Mat w_z, w_r, w_h;       // hidden_width x encoded_width
  Mat u_z, u_r, u_h;       // hidden_width x hidden_width
  Vec b_z, b_r, b_h;
  Mat head_w1;             // head_width x hidden_width
  Vec head_b1;
  Mat head_w2;             // 1 x head_width
  Vec head_b2;             // 1

  static GruAttentionModel zeros(const GruAttentionConfig& cfg);
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per matrix, biases 0.
  static GruAttentionModel init(const GruAttentionConfig& cfg, Rng& rng);

  GruAttentionModel zeros_like() const { return zeros(cfg); }
  std::vector<TensorView> tensors();
  Vec flatten() const;
  void unflatten(std::span<const double> flat);
  std::size_t param_count() const;
};

// Per-group dense encoding with ReLU; no cross-group mixing.
Vec encode_groups(const GruAttentionModel& m, std::span<const double> x);

// alpha = sigmoid(attn_w [h_prev | x] + attn_b); scales each group's slice of
// the encoded vector by its alpha component.
struct AttentionOut {
  Vec scaled;  // encoded_width
  Vec alpha;   // n_groups
};
AttentionOut attention_forward(const GruAttentionModel& m, std::span<const double> h_prev,
                               std::span<const double> x, std::span<const double> encoded);

// One GRU update: h = (1-z) o h_prev + z o tanh(...), update/reset gates.
Vec gru_step(const GruAttentionModel& m, std::span<const double> x_scaled,
             std::span<const double> h_prev);

// Two linear layers with ReLU between and sigmoid after; scalar in (0,1).
double head_forward(const GruAttentionModel& m, std::span<const double> h);

// Everything one step computes, retained for backprop and trace export.
struct StepCache {
  Vec x;
  std::vector<Vec> enc_pre;  // per group, pre-ReLU
  Vec encoded;
  Vec attn_pre;
  Vec alpha;
  Vec scaled;
  Vec h_prev, z, r, h_cand, h;
  Vec head_pre, head_act;
  double logit = 0.0;
  double yhat = 0.0;
};

// Single fused step; the batch and streaming paths both call this, which is
// what makes their outputs bit-identical.
void forward_step(const GruAttentionModel& m, std::span<const double> x,
                  std::span<const double> h_prev, StepCache& cache);

struct ForwardResult {
  std::vector<double> yhat;
  std::vector<Vec> h;
  std::vector<Vec> alpha;
  Vec h_final;
};

ForwardResult network_forward(const GruAttentionModel& m, const std::vector<Vec>& x_seq,
                              const Vec* h0 = nullptr);

struct BackwardResult {
  double loss = 0.0;
  std::size_t n_valid = 0;
  GruAttentionModel grads;
};

// Mean binary cross-entropy over valid bins and its gradients, computed by
// backpropagation through time. The backward recursion through the hidden
// state is cut every trunc_len steps; forward state still flows across cuts.
BackwardResult network_backward(const GruAttentionModel& m, const std::vector<Vec>& x_seq,
                                const std::vector<double>& y,
                                const std::vector<std::uint8_t>& valid, std::size_t trunc_len,
                                const Vec* h0 = nullptr);

}  // namespace sensecast
