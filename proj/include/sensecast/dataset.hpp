#pragma once

#include <vector>

#include "sensecast/ingest.hpp"
#include "sensecast/label.hpp"
#include "sensecast/model.hpp"
#include "sensecast/resample.hpp"
#include "sensecast/train.hpp"

namespace sensecast {

// One player's session taken through the full pipeline at a given (dt, tau):
// preprocessed, resampled, and labeled. Features stay un-normalized here;
// normalization statistics depend on the train split.
struct PlayerData {
  std::string player_id;
  std::int64_t duration_ms = 0;
  std::vector<GameEvent> events;
  FeatureSeries features;
  TargetSeries targets;
  PreprocessStats stats;
};

PlayerData build_player_data(const SessionRecord& record, double dt_s, double tau_s,
                             const PreprocessOptions& opts = {});

std::vector<PlayerData> build_dataset(const std::vector<SessionRecord>& sessions, double dt_s,
                                      double tau_s, const PreprocessOptions& opts = {});

// Column means and standard deviations over every frame of the given players.
// Zero-variance columns get stddev 1.
NormStats compute_norm_stats(const std::vector<const PlayerData*>& players);

// Normalized per-step inputs plus targets, ready for training or scoring.
PlayerSequence make_sequence(const PlayerData& player, const NormStats& norm);

}  // namespace sensecast
