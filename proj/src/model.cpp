#include "sensecast/model.hpp"

#include <cmath>
#include <numeric>

#include "sensecast/errors.hpp"
#include "sensecast/label.hpp"

namespace sensecast {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

namespace {

void matvec(const Mat& m, std::span<const double> x, Vec& y) {
  y.assign(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = m.a.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void matvec_add(const Mat& m, std::span<const double> x, Vec& y) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = m.a.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] += s;
  }
}

// y += M^T x
void matvec_t_add(const Mat& m, std::span<const double> x, Vec& y) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double xi = x[i];
    const double* row = m.a.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
  }
}

// M += a b^T
void outer_add(Mat& m, std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.a.data() + i * m.cols;
    const double ai = a[i];
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += ai * b[j];
  }
}

void add_to(Vec& y, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

// Numerically stable binary cross-entropy from the pre-sigmoid logit.
double bce_from_logit(double logit, double y) {
  const double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit))
                                    : std::log1p(std::exp(logit));
  return softplus - y * logit;
}

}  // namespace

void NormStats::apply(const double* raw, Vec& out) const {
  out.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
}

Vec NormStats::apply(const double* raw) const {
  Vec out;
  apply(raw, out);
  return out;
}

double LogisticModel::forward(std::span<const double> x) const {
  double s = b;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return sigmoid(s);
}

std::vector<TensorView> LogisticModel::tensors() {
  return {
      {"w", {w.size()}, w.data(), w.size()},
      {"b", {1}, &b, 1},
  };
}

Vec LogisticModel::flatten() const {
  Vec out(w);
  out.push_back(b);
  return out;
}

void LogisticModel::unflatten(std::span<const double> flat) {
  if (flat.size() != w.size() + 1) throw ConfigError("logistic parameter size mismatch");
  std::copy(flat.begin(), flat.end() - 1, w.begin());
  b = flat.back();
}

double logistic_loss_grad(const LogisticModel& model, const std::vector<Vec>& xs,
                          const std::vector<double>& ys, double l2, LogisticModel* grad) {
  const std::size_t n = xs.size();
  if (n == 0) throw ConfigError("logistic loss over empty set");
  if (grad) {
    grad->w.assign(model.w.size(), 0.0);
    grad->b = 0.0;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double logit = model.b;
    for (std::size_t j = 0; j < model.w.size(); ++j) logit += model.w[j] * xs[i][j];
    loss += bce_from_logit(logit, ys[i]);
    if (grad) {
      const double d = sigmoid(logit) - ys[i];
      for (std::size_t j = 0; j < model.w.size(); ++j) grad->w[j] += d * xs[i][j];
      grad->b += d;
    }
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (double wj : model.w) reg += wj * wj;
  loss += 0.5 * l2 * reg;
  if (grad) {
    for (std::size_t j = 0; j < model.w.size(); ++j) {
      grad->w[j] = grad->w[j] / static_cast<double>(n) + l2 * model.w[j];
    }
    grad->b /= static_cast<double>(n);
  }
  return loss;
}

double baseline_predict(const std::vector<GameEvent>& events, std::int64_t t_ms,
                        std::int64_t tau_ms) {
  const auto p = trailing_proportion(events, t_ms, tau_ms);
  return p ? *p : 0.5;
}

std::size_t GruAttentionConfig::input_width() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
}

GruAttentionModel GruAttentionModel::zeros(const GruAttentionConfig& cfg) {
  if (cfg.group_sizes.empty() || cfg.encoder_width == 0 || cfg.hidden_width == 0 ||
      cfg.head_width == 0) {
    throw ConfigError("network dimensions must be positive");
  }
  for (std::size_t gs : cfg.group_sizes) {
    if (gs == 0) throw ConfigError("empty feature group");
  }
  GruAttentionModel m;
  m.cfg = cfg;
  const std::size_t hid = cfg.hidden_width;
  const std::size_t enc = cfg.encoded_width();
  for (std::size_t g = 0; g < cfg.n_groups(); ++g) {
    m.enc_w.emplace_back(cfg.encoder_width, cfg.group_sizes[g]);
    m.enc_b.emplace_back(cfg.encoder_width, 0.0);
  }
  m.attn_w = Mat(cfg.n_groups(), hid + cfg.input_width());
  m.attn_b.assign(cfg.n_groups(), 0.0);
  m.w_z = Mat(hid, enc);
  m.w_r = Mat(hid, enc);
  m.w_h = Mat(hid, enc);
  m.u_z = Mat(hid, hid);
  m.u_r = Mat(hid, hid);
  m.u_h = Mat(hid, hid);
  m.b_z.assign(hid, 0.0);
  m.b_r.assign(hid, 0.0);
  m.b_h.assign(hid, 0.0);
  m.head_w1 = Mat(cfg.head_width, hid);
  m.head_b1.assign(cfg.head_width, 0.0);
  m.head_w2 = Mat(1, cfg.head_width);
  m.head_b2.assign(1, 0.0);
  return m;
}

GruAttentionModel GruAttentionModel::init(const GruAttentionConfig& cfg, Rng& rng) {
  GruAttentionModel m = zeros(cfg);
  for (auto& t : m.tensors()) {
    if (t.shape.size() != 2) continue;  // biases stay 0
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.shape[1]));
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-bound, bound);
  }
  return m;
}

std::vector<TensorView> GruAttentionModel::tensors() {
  std::vector<TensorView> out;
  auto mat = [&out](const std::string& name, Mat& m) {
    out.push_back({name, {m.rows, m.cols}, m.a.data(), m.a.size()});
  };
  auto vec = [&out](const std::string& name, Vec& v) {
    out.push_back({name, {v.size()}, v.data(), v.size()});
  };
  for (std::size_t g = 0; g < cfg.n_groups(); ++g) {
    mat("enc_w" + std::to_string(g), enc_w[g]);
    vec("enc_b" + std::to_string(g), enc_b[g]);
  }
  if (cfg.use_attention) {
    mat("attn_w", attn_w);
    vec("attn_b", attn_b);
  }
  mat("w_z", w_z);
  mat("u_z", u_z);
  vec("b_z", b_z);
  mat("w_r", w_r);
  mat("u_r", u_r);
  vec("b_r", b_r);
  mat("w_h", w_h);
  mat("u_h", u_h);
  vec("b_h", b_h);
  mat("head_w1", head_w1);
  vec("head_b1", head_b1);
  mat("head_w2", head_w2);
  vec("head_b2", head_b2);
  return out;
}

Vec GruAttentionModel::flatten() const {
  Vec out;
  auto views = const_cast<GruAttentionModel*>(this)->tensors();
  for (const auto& t : views) out.insert(out.end(), t.data, t.data + t.size);
  return out;
}

void GruAttentionModel::unflatten(std::span<const double> flat) {
  std::size_t pos = 0;
  for (auto& t : tensors()) {
    if (pos + t.size > flat.size()) throw ConfigError("network parameter size mismatch");
    std::copy(flat.begin() + pos, flat.begin() + pos + t.size, t.data);
    pos += t.size;
  }
  if (pos != flat.size()) throw ConfigError("network parameter size mismatch");
}

std::size_t GruAttentionModel::param_count() const {
  std::size_t n = 0;
  for (const auto& t : const_cast<GruAttentionModel*>(this)->tensors()) n += t.size;
  return n;
}

Vec encode_groups(const GruAttentionModel& m, std::span<const double> x) {
  Vec out(m.cfg.encoded_width(), 0.0);
  std::size_t in_off = 0;
  for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
    const Mat& w = m.enc_w[g];
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = m.enc_b[g][i];
      const double* row = w.a.data() + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j) s += row[j] * x[in_off + j];
      out[g * m.cfg.encoder_width + i] = s > 0.0 ? s : 0.0;
    }
    in_off += m.cfg.group_sizes[g];
  }
  return out;
}

AttentionOut attention_forward(const GruAttentionModel& m, std::span<const double> h_prev,
                               std::span<const double> x, std::span<const double> encoded) {
  if (!m.cfg.use_attention) throw ConfigError("attention_forward on a no-attention network");
  AttentionOut out;
  out.alpha.assign(m.cfg.n_groups(), 0.0);
  const std::size_t hid = m.cfg.hidden_width;
  for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
    double s = m.attn_b[g];
    const double* row = m.attn_w.a.data() + g * m.attn_w.cols;
    for (std::size_t j = 0; j < hid; ++j) s += row[j] * h_prev[j];
    for (std::size_t j = 0; j < m.cfg.input_width(); ++j) s += row[hid + j] * x[j];
    out.alpha[g] = sigmoid(s);
  }
  out.scaled.assign(encoded.begin(), encoded.end());
  for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
    for (std::size_t i = 0; i < m.cfg.encoder_width; ++i) {
      out.scaled[g * m.cfg.encoder_width + i] *= out.alpha[g];
    }
  }
  return out;
}

Vec gru_step(const GruAttentionModel& m, std::span<const double> x_scaled,
             std::span<const double> h_prev) {
  const std::size_t hid = m.cfg.hidden_width;
  Vec z, r, rh(hid), cand;
  matvec(m.w_z, x_scaled, z);
  matvec_add(m.u_z, h_prev, z);
  for (std::size_t i = 0; i < hid; ++i) z[i] = sigmoid(z[i] + m.b_z[i]);
  matvec(m.w_r, x_scaled, r);
  matvec_add(m.u_r, h_prev, r);
  for (std::size_t i = 0; i < hid; ++i) r[i] = sigmoid(r[i] + m.b_r[i]);
  for (std::size_t i = 0; i < hid; ++i) rh[i] = r[i] * h_prev[i];
  matvec(m.w_h, x_scaled, cand);
  matvec_add(m.u_h, rh, cand);
  for (std::size_t i = 0; i < hid; ++i) cand[i] = std::tanh(cand[i] + m.b_h[i]);
  Vec h(hid);
  for (std::size_t i = 0; i < hid; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
  return h;
}

double head_forward(const GruAttentionModel& m, std::span<const double> h) {
  Vec act;
  matvec(m.head_w1, h, act);
  for (std::size_t i = 0; i < act.size(); ++i) {
    act[i] += m.head_b1[i];
    if (act[i] < 0.0) act[i] = 0.0;
  }
  double logit = m.head_b2[0];
  for (std::size_t i = 0; i < act.size(); ++i) logit += m.head_w2.a[i] * act[i];
  return sigmoid(logit);
}

void forward_step(const GruAttentionModel& m, std::span<const double> x,
                  std::span<const double> h_prev, StepCache& c) {
  const std::size_t hid = m.cfg.hidden_width;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());

  // Grouped encoders (pre-activations kept for the backward pass).
  c.enc_pre.assign(m.cfg.n_groups(), Vec());
  c.encoded.assign(m.cfg.encoded_width(), 0.0);
  std::size_t in_off = 0;
  for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
    c.enc_pre[g].assign(m.cfg.encoder_width, 0.0);
    const Mat& w = m.enc_w[g];
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = m.enc_b[g][i];
      const double* row = w.a.data() + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j) s += row[j] * x[in_off + j];
      c.enc_pre[g][i] = s;
      c.encoded[g * m.cfg.encoder_width + i] = s > 0.0 ? s : 0.0;
    }
    in_off += m.cfg.group_sizes[g];
  }

  if (m.cfg.use_attention) {
    c.attn_pre.assign(m.cfg.n_groups(), 0.0);
    c.alpha.assign(m.cfg.n_groups(), 0.0);
    for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
      double s = m.attn_b[g];
      const double* row = m.attn_w.a.data() + g * m.attn_w.cols;
      for (std::size_t j = 0; j < hid; ++j) s += row[j] * h_prev[j];
      for (std::size_t j = 0; j < m.cfg.input_width(); ++j) s += row[hid + j] * x[j];
      c.attn_pre[g] = s;
      c.alpha[g] = sigmoid(s);
    }
    c.scaled = c.encoded;
    for (std::size_t g = 0; g < m.cfg.n_groups(); ++g) {
      for (std::size_t i = 0; i < m.cfg.encoder_width; ++i) {
        c.scaled[g * m.cfg.encoder_width + i] *= c.alpha[g];
      }
    }
  } else {
    c.attn_pre.clear();
    c.alpha.assign(m.cfg.n_groups(), 1.0);
    c.scaled = c.encoded;
  }

  // GRU cell.
  c.z.clear();
  matvec(m.w_z, c.scaled, c.z);
  matvec_add(m.u_z, h_prev, c.z);
  for (std::size_t i = 0; i < hid; ++i) c.z[i] = sigmoid(c.z[i] + m.b_z[i]);
  c.r.clear();
  matvec(m.w_r, c.scaled, c.r);
  matvec_add(m.u_r, h_prev, c.r);
  for (std::size_t i = 0; i < hid; ++i) c.r[i] = sigmoid(c.r[i] + m.b_r[i]);
  Vec rh(hid);
  for (std::size_t i = 0; i < hid; ++i) rh[i] = c.r[i] * h_prev[i];
  c.h_cand.clear();
  matvec(m.w_h, c.scaled, c.h_cand);
  matvec_add(m.u_h, rh, c.h_cand);
  for (std::size_t i = 0; i < hid; ++i) c.h_cand[i] = std::tanh(c.h_cand[i] + m.b_h[i]);
  c.h.assign(hid, 0.0);
  for (std::size_t i = 0; i < hid; ++i) {
    c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.h_cand[i];
  }

  // Head.
  c.head_pre.clear();
  matvec(m.head_w1, c.h, c.head_pre);
  c.head_act.assign(m.cfg.head_width, 0.0);
  for (std::size_t i = 0; i < m.cfg.head_width; ++i) {
    c.head_pre[i] += m.head_b1[i];
    c.head_act[i] = c.head_pre[i] > 0.0 ? c.head_pre[i] : 0.0;
  }
  c.logit = m.head_b2[0];
  for (std::size_t i = 0; i < m.cfg.head_width; ++i) c.logit += m.head_w2.a[i] * c.head_act[i];
  c.yhat = sigmoid(c.logit);
}

ForwardResult network_forward(const GruAttentionModel& m, const std::vector<Vec>& x_seq,
                              const Vec* h0) {
  ForwardResult out;
  Vec h = h0 ? *h0 : Vec(m.cfg.hidden_width, 0.0);
  if (h.size() != m.cfg.hidden_width) throw ConfigError("h0 width mismatch");
  StepCache cache;
  for (const auto& x : x_seq) {
    if (x.size() != m.cfg.input_width()) throw ConfigError("input width mismatch");
    forward_step(m, x, h, cache);
    h = cache.h;
    out.yhat.push_back(cache.yhat);
    out.h.push_back(cache.h);
    out.alpha.push_back(cache.alpha);
  }
  out.h_final = h;
  return out;
}

BackwardResult network_backward(const GruAttentionModel& m, const std::vector<Vec>& x_seq,
                                const std::vector<double>& y,
                                const std::vector<std::uint8_t>& valid, std::size_t trunc_len,
                                const Vec* h0) {
  if (x_seq.size() != y.size() || x_seq.size() != valid.size()) {
    throw ConfigError("sequence length mismatch");
  }
  if (trunc_len < 1) throw ConfigError("trunc_len must be >= 1");

  BackwardResult res;
  res.grads = m.zeros_like();

  const std::size_t n_steps = x_seq.size();
  std::vector<StepCache> caches(n_steps);
  Vec h = h0 ? *h0 : Vec(m.cfg.hidden_width, 0.0);
  if (h.size() != m.cfg.hidden_width) throw ConfigError("h0 width mismatch");
  for (std::size_t t = 0; t < n_steps; ++t) {
    forward_step(m, x_seq[t], h, caches[t]);
    h = caches[t].h;
    if (valid[t]) {
      const double term = bce_from_logit(caches[t].logit, y[t]);
      if (!std::isfinite(term)) {
        throw NumericalError("non-finite loss at step " + std::to_string(t));
      }
      res.loss += term;
      ++res.n_valid;
    }
  }
  if (res.n_valid == 0) {
    res.loss = 0.0;
    return res;
  }
  res.loss /= static_cast<double>(res.n_valid);

  const std::size_t hid = m.cfg.hidden_width;
  const std::size_t enc_total = m.cfg.encoded_width();
  GruAttentionModel& g = res.grads;

  Vec dh_next(hid, 0.0);  // dL/dh_t arriving from step t+1
  Vec dh(hid), dh_prev(hid), dq1(m.cfg.head_width);
  Vec dz(hid), dcand(hid), dcand_pre(hid), dr(hid), drh(hid), dz_pre(hid), dr_pre(hid);
  Vec dscaled(enc_total), dencoded(enc_total), rh(hid);
  Vec dalpha, dattn_pre, attn_in;

  for (std::size_t t = n_steps; t-- > 0;) {
    const StepCache& c = caches[t];

    // Head (loss term only on valid bins).
    std::fill(dh.begin(), dh.end(), 0.0);
    add_to(dh, dh_next);
    if (valid[t]) {
      const double dlogit = (c.yhat - y[t]) / static_cast<double>(res.n_valid);
      g.head_b2[0] += dlogit;
      for (std::size_t i = 0; i < m.cfg.head_width; ++i) {
        g.head_w2.a[i] += dlogit * c.head_act[i];
        dq1[i] = c.head_pre[i] > 0.0 ? m.head_w2.a[i] * dlogit : 0.0;
      }
      outer_add(g.head_w1, dq1, c.h);
      add_to(g.head_b1, dq1);
      matvec_t_add(m.head_w1, dq1, dh);
    }

    // GRU cell.
    for (std::size_t i = 0; i < hid; ++i) {
      dh_prev[i] = dh[i] * (1.0 - c.z[i]);
      dz[i] = dh[i] * (c.h_cand[i] - c.h_prev[i]);
      dcand[i] = dh[i] * c.z[i];
      dcand_pre[i] = dcand[i] * (1.0 - c.h_cand[i] * c.h_cand[i]);
      rh[i] = c.r[i] * c.h_prev[i];
    }
    outer_add(g.w_h, dcand_pre, c.scaled);
    outer_add(g.u_h, dcand_pre, rh);
    add_to(g.b_h, dcand_pre);
    std::fill(drh.begin(), drh.end(), 0.0);
    matvec_t_add(m.u_h, dcand_pre, drh);
    for (std::size_t i = 0; i < hid; ++i) {
      dr[i] = drh[i] * c.h_prev[i];
      dh_prev[i] += drh[i] * c.r[i];
      dz_pre[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
      dr_pre[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
    }
    outer_add(g.w_z, dz_pre, c.scaled);
    outer_add(g.u_z, dz_pre, c.h_prev);
    add_to(g.b_z, dz_pre);
    outer_add(g.w_r, dr_pre, c.scaled);
    outer_add(g.u_r, dr_pre, c.h_prev);
    add_to(g.b_r, dr_pre);
    matvec_t_add(m.u_z, dz_pre, dh_prev);
    matvec_t_add(m.u_r, dr_pre, dh_prev);
    std::fill(dscaled.begin(), dscaled.end(), 0.0);
    matvec_t_add(m.w_h, dcand_pre, dscaled);
    matvec_t_add(m.w_z, dz_pre, dscaled);
    matvec_t_add(m.w_r, dr_pre, dscaled);

    // Attention.
    if (m.cfg.use_attention) {
      dalpha.assign(m.cfg.n_groups(), 0.0);
      for (std::size_t grp = 0; grp < m.cfg.n_groups(); ++grp) {
        for (std::size_t i = 0; i < m.cfg.encoder_width; ++i) {
          const std::size_t idx = grp * m.cfg.encoder_width + i;
          dencoded[idx] = dscaled[idx] * c.alpha[grp];
          dalpha[grp] += dscaled[idx] * c.encoded[idx];
        }
      }
      dattn_pre.assign(m.cfg.n_groups(), 0.0);
      for (std::size_t grp = 0; grp < m.cfg.n_groups(); ++grp) {
        dattn_pre[grp] = dalpha[grp] * c.alpha[grp] * (1.0 - c.alpha[grp]);
      }
      attn_in.assign(hid + m.cfg.input_width(), 0.0);
      std::copy(c.h_prev.begin(), c.h_prev.end(), attn_in.begin());
      std::copy(c.x.begin(), c.x.end(), attn_in.begin() + static_cast<std::ptrdiff_t>(hid));
      outer_add(g.attn_w, dattn_pre, attn_in);
      add_to(g.attn_b, dattn_pre);
      // h_prev also feeds the attention block.
      for (std::size_t grp = 0; grp < m.cfg.n_groups(); ++grp) {
        const double* row = m.attn_w.a.data() + grp * m.attn_w.cols;
        for (std::size_t j = 0; j < hid; ++j) dh_prev[j] += row[j] * dattn_pre[grp];
      }
    } else {
      std::copy(dscaled.begin(), dscaled.end(), dencoded.begin());
    }

    // Grouped encoders.
    std::size_t in_off = 0;
    for (std::size_t grp = 0; grp < m.cfg.n_groups(); ++grp) {
      const std::size_t gs = m.cfg.group_sizes[grp];
      for (std::size_t i = 0; i < m.cfg.encoder_width; ++i) {
        if (c.enc_pre[grp][i] <= 0.0) continue;
        const double d = dencoded[grp * m.cfg.encoder_width + i];
        double* wrow = g.enc_w[grp].a.data() + i * gs;
        for (std::size_t j = 0; j < gs; ++j) wrow[j] += d * c.x[in_off + j];
        g.enc_b[grp][i] += d;
      }
      in_off += gs;
    }

    // Truncated BPTT: the recursion through h is cut at segment starts.
    if (t % trunc_len == 0) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
    } else {
      dh_next = dh_prev;
    }
  }
  return res;
}

}  // namespace sensecast
