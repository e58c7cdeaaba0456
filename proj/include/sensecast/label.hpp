#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sensecast/ingest.hpp"

namespace sensecast {

// Per-bin performance target. A bin is valid iff its kills proportion is
// defined, its past mean is defined, and the window [t, t+tau] fits inside
// the session.
struct TargetSeries {
  std::string player_id;
  double dt_s = 0.0;
  double tau_s = 0.0;
  std::vector<std::optional<double>> p;          // kills proportion in [0,1]
  std::vector<std::optional<double>> past_mean;  // running mean of past defined p
  std::vector<std::uint8_t> y;                   // meaningful only where valid
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return p.size(); }
};

// Proportion of kills among kills+deaths in [t, t+tau), both edges in ms.
// Returns nullopt when the window holds no events (0/0).
std::optional<double> kills_proportion(const std::vector<GameEvent>& events, std::int64_t t_ms,
                                       std::int64_t tau_ms);

// Same proportion over the trailing window [t-tau, t); nullopt when t < tau
// or the window holds no events. Used only by the baseline model.
std::optional<double> trailing_proportion(const std::vector<GameEvent>& events, std::int64_t t_ms,
                                          std::int64_t tau_ms);

// Binarizes a per-bin proportion series against the running mean of the
// defined past values: y(k) = 1 iff p(k) > mean(p(0..k-1)), strictly.
// Bins with undefined p or no defined past are invalid.
TargetSeries binarize(std::vector<std::optional<double>> p, double dt_s, double tau_s,
                      const std::string& player_id);

// Full target construction for n_bins bins of width dt_s: p per bin (undefined
// when the window [t, t+tau] extends past the session end), then binarize.
TargetSeries build_targets(const std::vector<GameEvent>& events, std::size_t n_bins, double dt_s,
                           double tau_s, std::int64_t duration_ms, const std::string& player_id);

// CSV `bin_index,p,past_mean,y,valid` with empty fields for undefined.
std::string target_series_to_csv(const TargetSeries& ts);

}  // namespace sensecast
