#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace sensecast {

// The fixed 15-channel feature layout. Column order is identical across all
// sessions of a run and matches the session manifest channel list.
inline constexpr std::size_t kNumChannels = 15;

enum class AggKind {
  kMean,  // state-like channels: average within a bin
  kSum,   // distance-like channels: total within a bin
};

enum class ReparamMode {
  kNone,            // scalar channel used as-is
  kMouseDistance,   // (dx, dy) increments -> per-sample Euclidean distance
  kGazeDistance,    // (x, y) positions -> distance from previous position
  kEmgL1Reference,  // |v - per-session median|
};

struct ChannelInfo {
  std::string_view name;
  int components;  // columns in the raw CSV besides timestamp_ms
  AggKind agg;
  ReparamMode reparam;
};

inline constexpr std::array<ChannelInfo, kNumChannels> kChannels{{
    {"heart_rate", 1, AggKind::kMean, ReparamMode::kNone},
    {"muscle_activity", 1, AggKind::kMean, ReparamMode::kEmgL1Reference},
    {"skin_resistance", 1, AggKind::kMean, ReparamMode::kNone},
    {"gaze_movement", 2, AggKind::kSum, ReparamMode::kGazeDistance},
    {"mouse_movement", 2, AggKind::kSum, ReparamMode::kMouseDistance},
    {"mouse_scroll", 1, AggKind::kSum, ReparamMode::kNone},
    {"chair_accel_x", 1, AggKind::kMean, ReparamMode::kNone},
    {"chair_accel_y", 1, AggKind::kMean, ReparamMode::kNone},
    {"chair_accel_z", 1, AggKind::kMean, ReparamMode::kNone},
    {"chair_gyro_x", 1, AggKind::kMean, ReparamMode::kNone},
    {"chair_gyro_y", 1, AggKind::kMean, ReparamMode::kNone},
    {"chair_gyro_z", 1, AggKind::kMean, ReparamMode::kNone},
    {"co2", 1, AggKind::kMean, ReparamMode::kNone},
    {"temperature", 1, AggKind::kMean, ReparamMode::kNone},
    {"humidity", 1, AggKind::kMean, ReparamMode::kNone},
}};

// Returns the channel index for `name`, or kNumChannels if unknown.
std::size_t channel_index(std::string_view name);

// Contiguous column slice of one feature group.
struct GroupSlice {
  std::string name;
  std::size_t begin;
  std::size_t size;
};

inline constexpr std::size_t kNumGroups = 3;

// Fixed column partition used by the grouped dense encoders and the
// attention block: physical activity, chair movement, environment.
std::array<GroupSlice, kNumGroups> group_slices();

}  // namespace sensecast
