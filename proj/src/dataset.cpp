#include "sensecast/dataset.hpp"

#include <cmath>

#include "sensecast/errors.hpp"

namespace sensecast {

PlayerData build_player_data(const SessionRecord& record, double dt_s, double tau_s,
                             const PreprocessOptions& opts) {
  PlayerData pd;
  pd.player_id = record.player_id;
  pd.duration_ms = record.duration_ms;
  pd.events = record.events;
  CleanSession clean = preprocess_session(record, opts);
  pd.stats = clean.stats;
  pd.features = resample(clean, dt_s);
  pd.targets = build_targets(record.events, pd.features.n_bins, dt_s, tau_s, record.duration_ms,
                             record.player_id);
  return pd;
}

std::vector<PlayerData> build_dataset(const std::vector<SessionRecord>& sessions, double dt_s,
                                      double tau_s, const PreprocessOptions& opts) {
  std::vector<PlayerData> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(build_player_data(s, dt_s, tau_s, opts));
  return out;
}

NormStats compute_norm_stats(const std::vector<const PlayerData*>& players) {
  if (players.empty()) throw ConfigError("normalization statistics need at least one player");
  NormStats norm;
  norm.mean.assign(kNumChannels, 0.0);
  norm.stddev.assign(kNumChannels, 0.0);
  std::size_t n = 0;
  for (const auto* p : players) n += p->features.n_bins;
  if (n == 0) throw ConfigError("normalization statistics need at least one frame");
  for (const auto* p : players) {
    for (std::size_t k = 0; k < p->features.n_bins; ++k) {
      for (std::size_t c = 0; c < kNumChannels; ++c) norm.mean[c] += p->features.at(k, c);
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) norm.mean[c] /= static_cast<double>(n);
  for (const auto* p : players) {
    for (std::size_t k = 0; k < p->features.n_bins; ++k) {
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        const double d = p->features.at(k, c) - norm.mean[c];
        norm.stddev[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    norm.stddev[c] = std::sqrt(norm.stddev[c] / static_cast<double>(n));
    if (norm.stddev[c] == 0.0) norm.stddev[c] = 1.0;  // degenerate column passes through as 0
  }
  return norm;
}

PlayerSequence make_sequence(const PlayerData& player, const NormStats& norm) {
  PlayerSequence seq;
  seq.player_id = player.player_id;
  const std::size_t n = player.features.n_bins;
  seq.x.reserve(n);
  seq.y.assign(n, 0.0);
  seq.valid.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    seq.x.push_back(norm.apply(player.features.row(k)));
    if (player.targets.valid[k]) {
      seq.valid[k] = 1;
      seq.y[k] = player.targets.y[k];
    }
  }
  return seq;
}

}  // namespace sensecast
