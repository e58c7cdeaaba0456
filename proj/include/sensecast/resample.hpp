#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sensecast/channels.hpp"
#include "sensecast/ingest.hpp"

namespace sensecast {

// Common-clock feature matrix: N rows of 15 columns, bin k covering
// [k*dt, (k+1)*dt). Column order is the kChannels order.
struct FeatureSeries {
  std::string player_id;
  double dt_s = 0.0;
  std::int64_t t0_ms = 0;
  std::size_t n_bins = 0;
  std::vector<double> frames;  // n_bins * kNumChannels, row-major

  double at(std::size_t bin, std::size_t col) const { return frames[bin * kNumChannels + col]; }
  double& at(std::size_t bin, std::size_t col) { return frames[bin * kNumChannels + col]; }
  const double* row(std::size_t bin) const { return frames.data() + bin * kNumChannels; }
};

// Aggregates the 15 clean streams onto the common clock. Mean-kind channels
// average the samples in each bin; sum-kind channels total them. Empty bins:
// mean-kind interpolates linearly between neighboring non-empty bins (endpoint
// copy at the edges), sum-kind becomes 0 (no movement means zero distance).
// The trailing partial bin is dropped, so n_bins = floor(duration / dt).
FeatureSeries resample(const CleanSession& session, double dt_s);

// CSV with header `bin_index,heart_rate,...,humidity`.
std::string feature_series_to_csv(const FeatureSeries& fs);
FeatureSeries feature_series_from_csv(const std::filesystem::path& path, double dt_s,
                                      const std::string& player_id);

// JSON sidecar {dt_s, column_kinds} accompanying the CSV.
std::string feature_sidecar_json(const FeatureSeries& fs);

}  // namespace sensecast
