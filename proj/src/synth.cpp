#include "sensecast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"
#include "sensecast/eval.hpp"
#include "sensecast/label.hpp"
#include "sensecast/rng.hpp"

namespace sensecast {

namespace {

// Native sampling rates in Hz (mouse scroll has no published rate; 10 Hz is
// a plausible polling choice). Scaled by cfg.rate_scale at generation time.
constexpr std::array<double, kNumChannels> kNativeRateHz{
    3.0,    // heart_rate
    70.0,   // muscle_activity
    70.0,   // skin_resistance
    90.0,   // gaze_movement
    250.0,  // mouse_movement
    10.0,   // mouse_scroll
    100.0, 100.0, 100.0,  // chair accel
    100.0, 100.0, 100.0,  // chair gyro
    0.2,    // co2
    5.0,    // temperature
    5.0,    // humidity
};

// Additive channel model: baseline + load_f * f + load_g * drift + noise.
// Physical channels carry the strongest latent loadings, chair channels a
// moderate one, environment channels mostly slow drift.
struct ChannelModel {
  double baseline;
  double load_f;
  double load_g;
  double noise_sd;
  double drift_timescale_s;
};

constexpr std::array<ChannelModel, kNumChannels> kChannelModels{{
    {72.0, 6.0, 5.0, 1.5, 600.0},     // heart_rate
    {30.0, 12.0, 10.0, 4.0, 600.0},   // muscle_activity
    {400.0, -50.0, 45.0, 12.0, 600.0},// skin_resistance
    {0.0, 0.0, 0.0, 0.0, 600.0},      // gaze_movement (walk, handled separately)
    {0.0, 0.0, 0.0, 0.0, 600.0},      // mouse_movement (increments, separate)
    {0.0, 0.0, 0.0, 0.0, 600.0},      // mouse_scroll (separate)
    {0.0, 0.25, 0.6, 0.4, 600.0},     // chair_accel_x
    {0.0, 0.20, 0.6, 0.4, 600.0},     // chair_accel_y
    {0.0, 0.15, 0.6, 0.4, 600.0},     // chair_accel_z
    {0.0, 0.20, 0.6, 0.5, 600.0},     // chair_gyro_x
    {0.0, 0.15, 0.6, 0.5, 600.0},     // chair_gyro_y
    {0.0, 0.10, 0.6, 0.5, 600.0},     // chair_gyro_z
    {650.0, 6.0, 60.0, 8.0, 900.0},   // co2
    {23.5, 0.15, 1.2, 0.15, 900.0},   // temperature
    {45.0, 0.5, 4.0, 0.5, 900.0},     // humidity
}};

std::vector<double> ou_path(Rng& rng, std::size_t n, double timescale_s) {
  std::vector<double> f(n);
  const double a = std::exp(-1.0 / timescale_s);
  const double innovation = std::sqrt(1.0 - a * a);
  f[0] = rng.normal();
  for (std::size_t i = 1; i < n; ++i) f[i] = a * f[i - 1] + innovation * rng.normal();
  return f;
}

// Mean-reverting latent smoothed by a boxcar of width `window_s`, then
// standardized to unit variance. Smoothing removes the sub-window roughness
// of the plain random walk, so the latent at a window start stays
// representative of the whole forecasting window.
std::vector<double> smooth_latent_path(Rng& rng, std::size_t n, double timescale_s,
                                       std::size_t window_s) {
  if (window_s < 2) return ou_path(rng, n, timescale_s);
  const std::vector<double> raw = ou_path(rng, n + window_s, timescale_s);
  std::vector<double> f(n);
  // Var of the boxcar mean of an OU with unit variance.
  const double r = timescale_s / static_cast<double>(window_s);
  const double var = 2.0 * r * (1.0 - r * (1.0 - std::exp(-1.0 / r)));
  const double scale = 1.0 / std::sqrt(var);
  double sum = 0.0;
  for (std::size_t i = 0; i < window_s; ++i) sum += raw[i];
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = scale * sum / static_cast<double>(window_s);
    sum += raw[i + window_s] - raw[i];
  }
  return f;
}

std::vector<std::int64_t> sample_times(double rate_hz, double rate_scale,
                                       std::int64_t duration_ms) {
  const double rate = rate_hz * rate_scale;
  auto period = static_cast<std::int64_t>(std::llround(1000.0 / rate));
  if (period < 1) period = 1;
  std::vector<std::int64_t> t;
  for (std::int64_t ts = 0; ts < duration_ms; ts += period) t.push_back(ts);
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_players <= 0 || duration_ms <= 0) throw ConfigError("synth: players and duration must be positive");
  if (!(coupling >= 0.0 && coupling <= 1.0)) throw ConfigError("synth: coupling must be in [0,1]");
  if (!(kill_rate_per_min > 0.0) || !(death_rate_per_min > 0.0)) {
    throw ConfigError("synth: event rates must be positive");
  }
  if (!(latent_timescale_s > 0.0)) throw ConfigError("synth: latent timescale must be positive");
  if (!(latent_smooth_s >= 0.0)) throw ConfigError("synth: latent smoothing must be nonnegative");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    throw ConfigError("synth: missing fraction must be in [0,1)");
  }
  if (!(rate_scale > 0.0)) throw ConfigError("synth: rate scale must be positive");
}

SynthSession generate_player(const SynthConfig& cfg, int player_index) {
  cfg.validate();
  Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(player_index)));

  SynthSession out;
  char name[16];
  std::snprintf(name, sizeof(name), "player_%02d", player_index);
  out.record.player_id = name;
  out.record.duration_ms = cfg.duration_ms;

  const std::size_t n_sec = static_cast<std::size_t>(cfg.duration_ms / 1000) + 2;
  out.latent_1hz = smooth_latent_path(rng, n_sec, cfg.latent_timescale_s,
                                      static_cast<std::size_t>(cfg.latent_smooth_s));
  const std::vector<double>& f = out.latent_1hz;

  auto latent_at = [&f](std::int64_t t_ms) { return f[static_cast<std::size_t>(t_ms / 1000)]; };

  // Movement-storm episodes: while active, the chair sensors saturate with
  // large-amplitude noise and their latent loading disappears. Gives the
  // chair group a time-varying informativeness that per-group input gating
  // can exploit.
  const std::vector<double> storm_ou = ou_path(rng, n_sec, 90.0);
  std::vector<std::uint8_t> storm(n_sec);
  for (std::size_t i = 0; i < n_sec; ++i) storm[i] = storm_ou[i] > 0.8 ? 1 : 0;
  auto storm_at = [&storm](std::int64_t t_ms) {
    return storm[static_cast<std::size_t>(t_ms / 1000)] != 0;
  };

  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const ChannelModel& cm = kChannelModels[ch];
    RawStream s;
    s.sensor_id = std::string(kChannels[ch].name);
    s.components = kChannels[ch].components;
    s.t_ms = sample_times(kNativeRateHz[ch], cfg.rate_scale, cfg.duration_ms);
    const std::size_t n = s.t_ms.size();
    s.values.assign(n * static_cast<std::size_t>(s.components), 0.0);
    s.missing.assign(n, 0);

    const std::vector<double> drift = ou_path(rng, n_sec, cm.drift_timescale_s);
    auto drift_at = [&drift](std::int64_t t_ms) {
      return drift[static_cast<std::size_t>(t_ms / 1000)];
    };

    const auto chan = static_cast<std::size_t>(channel_index(kChannels[ch].name));
    if (chan == 3) {  // gaze: position walk around the screen center
      double px = 960.0, py = 540.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double step_sd =
            35.0 * std::exp(0.3 * latent_at(s.t_ms[i]) + 0.25 * drift_at(s.t_ms[i]));
        px = 960.0 + 0.97 * (px - 960.0) + step_sd * rng.normal();
        py = 540.0 + 0.97 * (py - 540.0) + step_sd * rng.normal();
        s.values[i * 2] = px;
        s.values[i * 2 + 1] = py;
      }
    } else if (chan == 4) {  // mouse: increments
      for (std::size_t i = 0; i < n; ++i) {
        const double sd =
            6.0 * std::exp(0.35 * latent_at(s.t_ms[i]) + 0.25 * drift_at(s.t_ms[i]));
        s.values[i * 2] = sd * rng.normal();
        s.values[i * 2 + 1] = sd * rng.normal();
      }
    } else if (chan == 5) {  // scroll: nonnegative burst magnitudes
      for (std::size_t i = 0; i < n; ++i) {
        const double sd = 0.3 + 0.1 * std::exp(0.2 * latent_at(s.t_ms[i]));
        s.values[i] = std::abs(sd * rng.normal());
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        s.values[i] = cm.baseline + cm.load_f * latent_at(s.t_ms[i]) +
                      cm.load_g * drift_at(s.t_ms[i]) + cm.noise_sd * rng.normal();
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < cfg.missing_fraction) {
        s.missing[i] = 1;
        for (int c = 0; c < s.components; ++c) {
          s.values[i * static_cast<std::size_t>(s.components) + static_cast<std::size_t>(c)] = 0.0;
        }
      }
    }
    out.record.streams[ch] = std::move(s);
  }

  // Kill and death events from per-second inhomogeneous Poisson draws.
  std::vector<GameEvent> events;
  const std::size_t whole_sec = static_cast<std::size_t>(cfg.duration_ms / 1000);
  for (std::size_t sec = 0; sec < whole_sec; ++sec) {
    const double lam_kill = cfg.kill_rate_per_min / 60.0 * std::exp(cfg.coupling * f[sec]);
    const double lam_death = cfg.death_rate_per_min / 60.0 * std::exp(-cfg.coupling * f[sec]);
    const std::uint64_t nk = rng.poisson(lam_kill);
    for (std::uint64_t e = 0; e < nk; ++e) {
      events.push_back({static_cast<std::int64_t>(sec * 1000 + rng.uniform_int(1000)),
                        GameEvent::Kind::kKill});
    }
    const std::uint64_t nd = rng.poisson(lam_death);
    for (std::uint64_t e = 0; e < nd; ++e) {
      events.push_back({static_cast<std::int64_t>(sec * 1000 + rng.uniform_int(1000)),
                        GameEvent::Kind::kDeath});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const GameEvent& a, const GameEvent& b) { return a.t_ms < b.t_ms; });
  out.record.events = std::move(events);
  return out;
}

std::vector<SynthSession> generate(const SynthConfig& cfg) {
  std::vector<SynthSession> out;
  out.reserve(static_cast<std::size_t>(cfg.n_players));
  for (int i = 0; i < cfg.n_players; ++i) out.push_back(generate_player(cfg, i));
  return out;
}

double oracle_auc(const std::vector<SynthSession>& sessions, double dt_s, double tau_s) {
  const auto dt_ms = static_cast<std::int64_t>(std::llround(dt_s * 1000.0));
  std::vector<PlayerScores> scores;
  for (const auto& s : sessions) {
    const auto n_bins = static_cast<std::size_t>(s.record.duration_ms / dt_ms);
    const TargetSeries ts =
        build_targets(s.record.events, n_bins, dt_s, tau_s, s.record.duration_ms, s.record.player_id);
    PlayerScores ps;
    ps.player_id = s.record.player_id;
    for (std::size_t k = 0; k < n_bins; ++k) {
      if (!ts.valid[k]) continue;
      ps.labels.push_back(ts.y[k]);
      ps.scores.push_back(s.latent_1hz[static_cast<std::size_t>(k) *
                                       static_cast<std::size_t>(dt_ms) / 1000]);
    }
    scores.push_back(std::move(ps));
  }
  return per_player_mean_auc(scores).mean_auc;
}

std::filesystem::path write_session_files(const SynthSession& s,
                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const RawStream& st = s.record.streams[ch];
    std::string csv = "timestamp_ms";
    for (int c = 0; c < st.components; ++c) csv += ",v" + std::to_string(c + 1);
    csv += '\n';
    for (std::size_t i = 0; i < st.size(); ++i) {
      csv += std::to_string(st.t_ms[i]);
      for (int c = 0; c < st.components; ++c) {
        csv += ',';
        if (!st.missing[i]) csv += format_double(st.value(i, c));
      }
      csv += '\n';
    }
    write_file_atomic(dir / (std::string(kChannels[ch].name) + ".csv"), csv);
  }

  std::string events = "timestamp_ms,event\n";
  for (const auto& ev : s.record.events) {
    events += std::to_string(ev.t_ms);
    events += ev.kind == GameEvent::Kind::kKill ? ",kill\n" : ",death\n";
  }
  write_file_atomic(dir / "events.csv", events);

  nlohmann::json manifest;
  manifest["player_id"] = s.record.player_id;
  manifest["duration_ms"] = s.record.duration_ms;
  manifest["events"] = "events.csv";
  nlohmann::json channels = nlohmann::json::object();
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    channels[std::string(kChannels[ch].name)] = std::string(kChannels[ch].name) + ".csv";
  }
  manifest["channels"] = std::move(channels);
  const auto manifest_path = dir / "manifest.json";
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

void write_latent_file(const SynthSession& s, const std::filesystem::path& path) {
  std::string csv = "second,latent\n";
  for (std::size_t i = 0; i < s.latent_1hz.size(); ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_double(s.latent_1hz[i]);
    csv += '\n';
  }
  write_file_atomic(path, csv);
}

}  // namespace sensecast
