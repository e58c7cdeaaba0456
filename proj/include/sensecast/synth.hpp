#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sensecast/ingest.hpp"

namespace sensecast {

// Generator of synthetic sessions with a hidden mean-reverting "form" latent
// that couples the sensor channels to the kill/death intensities. Serves as
// the verification oracle in place of real recordings.
struct SynthConfig {
  int n_players = 21;
  std::int64_t duration_ms = 32 * 60 * 1000;
  double coupling = 1.0;  // 0 = latent and events independent
  double kill_rate_per_min = 3.0;
  double death_rate_per_min = 3.0;
  double latent_timescale_s = 300.0;  // mean-reversion time of the form latent
  double latent_smooth_s = 240.0;     // boxcar width smoothing the form latent
  double missing_fraction = 0.037;
  // Scales every channel's native sampling rate; < 1 keeps files small while
  // preserving the rate ordering across sensors.
  double rate_scale = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthSession {
  SessionRecord record;
  // Latent trajectory at 1 Hz, oracle use only; never written into the
  // public session files.
  std::vector<double> latent_1hz;
};

// Deterministic per (cfg, player index): sessions can be generated and
// written one at a time.
SynthSession generate_player(const SynthConfig& cfg, int player_index);
std::vector<SynthSession> generate(const SynthConfig& cfg);

// Mean per-player ROC AUC achieved by scoring each bin with the latent value
// at the bin start; an upper-bound reference for trained models.
double oracle_auc(const std::vector<SynthSession>& sessions, double dt_s, double tau_s);

// Writes manifest.json, events.csv, and one CSV per channel into `dir`.
// Returns the manifest path.
std::filesystem::path write_session_files(const SynthSession& s, const std::filesystem::path& dir);

// Latent trajectory CSV; callers keep it under a path excluded from
// training inputs (the CLI uses a separate "private" directory).
void write_latent_file(const SynthSession& s, const std::filesystem::path& path);

}  // namespace sensecast
