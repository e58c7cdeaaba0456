#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sensecast/channels.hpp"

namespace sensecast {

// One sensor's samples at its native rate. Multi-component samples (mouse,
// gaze) are stored row-major; a missing sample has no usable components.
struct RawStream {
  std::string sensor_id;
  int components = 1;
  std::vector<std::int64_t> t_ms;
  std::vector<double> values;  // size() * components, row-major
  std::vector<std::uint8_t> missing;

  std::size_t size() const { return t_ms.size(); }
  double value(std::size_t i, int c = 0) const {
    return values[i * static_cast<std::size_t>(components) + static_cast<std::size_t>(c)];
  }
};

struct GameEvent {
  enum class Kind { kKill, kDeath };
  std::int64_t t_ms = 0;
  Kind kind = Kind::kKill;
};

// One player's raw session: all sensor streams plus the kill/death log.
struct SessionRecord {
  std::string player_id;
  std::int64_t duration_ms = 0;
  std::array<RawStream, kNumChannels> streams;  // in kChannels order
  std::vector<GameEvent> events;
};

// Percentile bounds actually applied to a stream, one pair per component.
// Persisted so streaming inference reuses training-time bounds.
struct ClipBounds {
  std::vector<double> lo, hi;
};

// Fully preprocessed scalar stream: no missing entries.
struct CleanStream {
  std::string sensor_id;
  std::vector<std::int64_t> t_ms;
  std::vector<double> v;
};

// Clips every non-missing component value into its [P_lo, P_hi] percentile
// range (linear-interpolation quantiles over the stream's non-missing
// values). Bounds are returned for reuse in streaming mode.
RawStream clip_percentiles(const RawStream& stream, double lo, double hi, ClipBounds& bounds_out);

// Clips with externally supplied bounds (streaming path).
RawStream clip_with_bounds(const RawStream& stream, const ClipBounds& bounds);

// Converts a stream to the scalar form used by resampling:
//   mouse:  (dx, dy) increments -> sqrt(dx^2 + dy^2)
//   gaze:   (x, y) positions    -> distance from previous position (first = 0)
//   emg:    |v - ref|, ref defaulting to the stream's non-missing median
//   none:   values pass through
// Missing samples stay missing (a gaze distance is also missing when the
// previous sample is). Wrong component count throws StructuralError.
RawStream reparametrize(const RawStream& stream, ReparamMode mode,
                        std::optional<double> emg_reference = std::nullopt);

// Median of the non-missing values of a scalar stream.
double stream_median(const RawStream& stream);

// Trailing moving-window mean: each non-missing sample becomes the mean of
// the non-missing samples with timestamps in (t - window_ms, t]. Trailing so
// streaming inference stays causal.
RawStream smooth_moving_window(const RawStream& stream, std::int64_t window_ms = 100);

// Fills missing samples by linear interpolation between the neighboring
// valid samples; before the first / after the last valid sample the nearest
// valid value is copied. Requires >= 2 valid samples.
CleanStream interpolate_missing(const RawStream& stream);

// Per-session statistics needed to replay preprocessing without re-deriving
// anything from the stream itself.
struct PreprocessStats {
  std::array<ClipBounds, kNumChannels> clip;
  double emg_reference = 0.0;
};

struct PreprocessOptions {
  double clip_lo = 0.005;
  double clip_hi = 0.995;
  std::int64_t smooth_window_ms = 100;
  // When set, clipping and the EMG reference come from here instead of being
  // estimated from the session (streaming mode).
  std::optional<PreprocessStats> fixed;
};

struct CleanSession {
  std::string player_id;
  std::int64_t duration_ms = 0;
  std::array<CleanStream, kNumChannels> streams;
  std::vector<GameEvent> events;
  PreprocessStats stats;
};

// Full pipeline per channel: clip -> reparametrize -> smooth -> interpolate.
CleanSession preprocess_session(const SessionRecord& record, const PreprocessOptions& opts = {});

// Parses a session manifest (JSON) and its referenced CSV files, validating
// every invariant; violations are reported with file and line.
SessionRecord load_session(const std::filesystem::path& manifest_path);

// The files referenced by a manifest, manifest first (for input hashing).
std::vector<std::filesystem::path> session_file_list(const std::filesystem::path& manifest_path);

}  // namespace sensecast
