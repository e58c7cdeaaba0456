#include "sensecast/label.hpp"

#include <algorithm>
#include <cmath>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"

namespace sensecast {

namespace {

struct WindowCounts {
  std::int64_t kills = 0;
  std::int64_t deaths = 0;
};

// Events with timestamp in the half-open window [lo, hi).
WindowCounts count_window(const std::vector<GameEvent>& events, std::int64_t lo, std::int64_t hi) {
  WindowCounts c;
  for (const auto& ev : events) {
    if (ev.t_ms < lo) continue;
    if (ev.t_ms >= hi) break;  // events are ordered
    if (ev.kind == GameEvent::Kind::kKill) {
      ++c.kills;
    } else {
      ++c.deaths;
    }
  }
  return c;
}

}  // namespace

std::optional<double> kills_proportion(const std::vector<GameEvent>& events, std::int64_t t_ms,
                                       std::int64_t tau_ms) {
  if (t_ms < 0 || tau_ms <= 0) throw ConfigError("kills_proportion requires t >= 0 and tau > 0");
  const WindowCounts c = count_window(events, t_ms, t_ms + tau_ms);
  const std::int64_t total = c.kills + c.deaths;
  if (total == 0) return std::nullopt;
  return static_cast<double>(c.kills) / static_cast<double>(total);
}

std::optional<double> trailing_proportion(const std::vector<GameEvent>& events, std::int64_t t_ms,
                                          std::int64_t tau_ms) {
  if (tau_ms <= 0) throw ConfigError("trailing_proportion requires tau > 0");
  if (t_ms < tau_ms) return std::nullopt;
  return kills_proportion(events, t_ms - tau_ms, tau_ms);
}

TargetSeries binarize(std::vector<std::optional<double>> p, double dt_s, double tau_s,
                      const std::string& player_id) {
  TargetSeries ts;
  ts.player_id = player_id;
  ts.dt_s = dt_s;
  ts.tau_s = tau_s;
  const std::size_t n = p.size();
  ts.p = std::move(p);
  ts.past_mean.assign(n, std::nullopt);
  ts.y.assign(n, 0);
  ts.valid.assign(n, 0);

  double past_sum = 0.0;
  std::size_t past_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (past_count > 0) ts.past_mean[k] = past_sum / static_cast<double>(past_count);
    if (ts.p[k] && ts.past_mean[k]) {
      ts.valid[k] = 1;
      ts.y[k] = (*ts.p[k] > *ts.past_mean[k]) ? 1 : 0;
    }
    if (ts.p[k]) {
      past_sum += *ts.p[k];
      ++past_count;
    }
  }
  return ts;
}

TargetSeries build_targets(const std::vector<GameEvent>& events, std::size_t n_bins, double dt_s,
                           double tau_s, std::int64_t duration_ms, const std::string& player_id) {
  const auto dt_ms = static_cast<std::int64_t>(std::llround(dt_s * 1000.0));
  const auto tau_ms = static_cast<std::int64_t>(std::llround(tau_s * 1000.0));
  if (dt_ms <= 0 || tau_ms <= 0) throw ConfigError("dt and tau must be positive");

  std::vector<std::optional<double>> p(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const std::int64_t t = static_cast<std::int64_t>(k) * dt_ms;
    if (t + tau_ms > duration_ms) continue;  // window does not fit
    p[k] = kills_proportion(events, t, tau_ms);
  }
  return binarize(std::move(p), dt_s, tau_s, player_id);
}

std::string target_series_to_csv(const TargetSeries& ts) {
  std::string out = "bin_index,p,past_mean,y,valid\n";
  for (std::size_t k = 0; k < ts.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    if (ts.p[k]) out += format_double(*ts.p[k]);
    out += ',';
    if (ts.past_mean[k]) out += format_double(*ts.past_mean[k]);
    out += ',';
    if (ts.valid[k]) out += ts.y[k] ? '1' : '0';
    out += ',';
    out += ts.valid[k] ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace sensecast
