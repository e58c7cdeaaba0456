#include "sensecast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"

namespace sensecast {

namespace {

// Linear-interpolation quantile between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

bool sample_missing(const RawStream& s, std::size_t i) { return s.missing[i] != 0; }

}  // namespace

RawStream clip_percentiles(const RawStream& stream, double lo, double hi, ClipBounds& bounds_out) {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
    throw ConfigError("clip percentiles must satisfy 0 <= lo < hi <= 1");
  }
  bounds_out.lo.assign(stream.components, 0.0);
  bounds_out.hi.assign(stream.components, 0.0);
  std::vector<double> vals;
  for (int c = 0; c < stream.components; ++c) {
    vals.clear();
    for (std::size_t i = 0; i < stream.size(); ++i) {
      if (!sample_missing(stream, i)) vals.push_back(stream.value(i, c));
    }
    if (vals.empty()) {
      throw StructuralError("stream " + stream.sensor_id + " has no valid samples to clip");
    }
    std::sort(vals.begin(), vals.end());
    bounds_out.lo[c] = quantile_sorted(vals, lo);
    bounds_out.hi[c] = quantile_sorted(vals, hi);
  }
  return clip_with_bounds(stream, bounds_out);
}

RawStream clip_with_bounds(const RawStream& stream, const ClipBounds& bounds) {
  if (bounds.lo.size() != static_cast<std::size_t>(stream.components) ||
      bounds.hi.size() != static_cast<std::size_t>(stream.components)) {
    throw ConfigError("clip bounds component count mismatch for " + stream.sensor_id);
  }
  RawStream out = stream;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (sample_missing(out, i)) continue;
    for (int c = 0; c < out.components; ++c) {
      double& v = out.values[i * static_cast<std::size_t>(out.components) + static_cast<std::size_t>(c)];
      v = std::min(std::max(v, bounds.lo[c]), bounds.hi[c]);
    }
  }
  return out;
}

double stream_median(const RawStream& stream) {
  if (stream.components != 1) {
    throw StructuralError("median requires a scalar stream, got " + stream.sensor_id);
  }
  std::vector<double> vals;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (!sample_missing(stream, i)) vals.push_back(stream.value(i));
  }
  if (vals.empty()) throw StructuralError("stream " + stream.sensor_id + " has no valid samples");
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  return (n % 2 == 1) ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

RawStream reparametrize(const RawStream& stream, ReparamMode mode,
                        std::optional<double> emg_reference) {
  const int want = (mode == ReparamMode::kMouseDistance || mode == ReparamMode::kGazeDistance) ? 2 : 1;
  if (stream.components != want) {
    throw StructuralError("stream " + stream.sensor_id + " has " + std::to_string(stream.components) +
                          " components, reparametrization expects " + std::to_string(want));
  }
  RawStream out;
  out.sensor_id = stream.sensor_id;
  out.components = 1;
  out.t_ms = stream.t_ms;
  out.missing = stream.missing;
  out.values.assign(stream.size(), 0.0);

  switch (mode) {
    case ReparamMode::kNone:
      for (std::size_t i = 0; i < stream.size(); ++i) {
        if (!sample_missing(stream, i)) out.values[i] = stream.value(i);
      }
      break;
    case ReparamMode::kMouseDistance:
      for (std::size_t i = 0; i < stream.size(); ++i) {
        if (!sample_missing(stream, i)) {
          out.values[i] = std::hypot(stream.value(i, 0), stream.value(i, 1));
        }
      }
      break;
    case ReparamMode::kGazeDistance:
      for (std::size_t i = 0; i < stream.size(); ++i) {
        if (sample_missing(stream, i)) continue;
        if (i == 0) {
          out.values[i] = 0.0;
        } else if (sample_missing(stream, i - 1)) {
          // No usable previous position; let interpolation fill this in.
          out.missing[i] = 1;
        } else {
          out.values[i] = std::hypot(stream.value(i, 0) - stream.value(i - 1, 0),
                                     stream.value(i, 1) - stream.value(i - 1, 1));
        }
      }
      break;
    case ReparamMode::kEmgL1Reference: {
      const double ref = emg_reference ? *emg_reference : stream_median(stream);
      for (std::size_t i = 0; i < stream.size(); ++i) {
        if (!sample_missing(stream, i)) out.values[i] = std::abs(stream.value(i) - ref);
      }
      break;
    }
  }
  return out;
}

RawStream smooth_moving_window(const RawStream& stream, std::int64_t window_ms) {
  if (window_ms <= 0) throw ConfigError("smoothing window must be positive");
  if (stream.components != 1) {
    throw StructuralError("smoothing requires a scalar stream, got " + stream.sensor_id);
  }
  RawStream out = stream;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (sample_missing(stream, i)) continue;
    while (stream.t_ms[lo] <= stream.t_ms[i] - window_ms) ++lo;
    // Fresh summation per window keeps the result bit-identical to a
    // direct per-window reference regardless of stream length.
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = lo; j <= i; ++j) {
      if (sample_missing(stream, j)) continue;
      sum += stream.value(j);
      ++count;
    }
    out.values[i] = sum / static_cast<double>(count);
  }
  return out;
}

CleanStream interpolate_missing(const RawStream& stream) {
  if (stream.components != 1) {
    throw StructuralError("interpolation requires a scalar stream, got " + stream.sensor_id);
  }
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (!sample_missing(stream, i)) ++n_valid;
  }
  if (n_valid < 2) {
    throw StructuralError("stream " + stream.sensor_id + " has " + std::to_string(n_valid) +
                          " valid samples, interpolation needs at least 2");
  }

  CleanStream out;
  out.sensor_id = stream.sensor_id;
  out.t_ms = stream.t_ms;
  out.v.assign(stream.size(), 0.0);

  // prev_valid[i]: index of the last valid sample at or before i (or npos).
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> prev_valid(stream.size(), npos);
  std::size_t last = npos;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (!sample_missing(stream, i)) last = i;
    prev_valid[i] = last;
  }
  std::vector<std::size_t> next_valid(stream.size(), npos);
  std::size_t next = npos;
  for (std::size_t i = stream.size(); i-- > 0;) {
    if (!sample_missing(stream, i)) next = i;
    next_valid[i] = next;
  }

  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (!sample_missing(stream, i)) {
      out.v[i] = stream.value(i);
      continue;
    }
    const std::size_t p = prev_valid[i];
    const std::size_t q = next_valid[i];
    if (p == npos) {
      out.v[i] = stream.value(q);
    } else if (q == npos) {
      out.v[i] = stream.value(p);
    } else {
      const double t0 = static_cast<double>(stream.t_ms[p]);
      const double t1 = static_cast<double>(stream.t_ms[q]);
      const double v0 = stream.value(p);
      const double v1 = stream.value(q);
      out.v[i] = v0 + (v1 - v0) * (static_cast<double>(stream.t_ms[i]) - t0) / (t1 - t0);
    }
  }
  return out;
}

CleanSession preprocess_session(const SessionRecord& record, const PreprocessOptions& opts) {
  CleanSession out;
  out.player_id = record.player_id;
  out.duration_ms = record.duration_ms;
  out.events = record.events;

  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const RawStream& raw = record.streams[ch];
    RawStream clipped;
    if (opts.fixed) {
      out.stats.clip[ch] = opts.fixed->clip[ch];
      clipped = clip_with_bounds(raw, out.stats.clip[ch]);
    } else {
      clipped = clip_percentiles(raw, opts.clip_lo, opts.clip_hi, out.stats.clip[ch]);
    }

    const ReparamMode mode = kChannels[ch].reparam;
    std::optional<double> emg_ref;
    if (mode == ReparamMode::kEmgL1Reference) {
      emg_ref = opts.fixed ? opts.fixed->emg_reference : stream_median(clipped);
      out.stats.emg_reference = *emg_ref;
    }
    RawStream scalar = reparametrize(clipped, mode, emg_ref);
    RawStream smoothed = smooth_moving_window(scalar, opts.smooth_window_ms);
    out.streams[ch] = interpolate_missing(smoothed);
  }
  return out;
}

namespace {

std::vector<GameEvent> load_events(const std::filesystem::path& path, std::int64_t duration_ms) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw StructuralError(path.string() + ": empty events file");
  {
    auto header = split_csv_line(lines[0]);
    if (header.size() != 2 || header[0] != "timestamp_ms" || header[1] != "event") {
      throw StructuralError(path.string() + ":1: expected header 'timestamp_ms,event'");
    }
  }
  std::vector<GameEvent> events;
  std::int64_t prev_t = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(li + 1);
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != 2) throw StructuralError(ctx + ": expected 2 fields");
    GameEvent ev;
    ev.t_ms = parse_int_field(fields[0], ctx);
    if (fields[1] == "kill") {
      ev.kind = GameEvent::Kind::kKill;
    } else if (fields[1] == "death") {
      ev.kind = GameEvent::Kind::kDeath;
    } else {
      throw StructuralError(ctx + ": unknown event kind '" + fields[1] + "'");
    }
    if (ev.t_ms < 0 || ev.t_ms > duration_ms) {
      throw StructuralError(ctx + ": event timestamp " + std::to_string(ev.t_ms) +
                            " outside session bounds [0, " + std::to_string(duration_ms) + "]");
    }
    if (ev.t_ms < prev_t) throw StructuralError(ctx + ": event timestamps not ordered");
    prev_t = ev.t_ms;
    events.push_back(ev);
  }
  return events;
}

RawStream load_stream(const std::filesystem::path& path, const ChannelInfo& info) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw StructuralError(path.string() + ": empty sensor file");
  {
    auto header = split_csv_line(lines[0]);
    const std::size_t want = 1 + static_cast<std::size_t>(info.components);
    bool ok = header.size() == want && header[0] == "timestamp_ms";
    for (std::size_t c = 1; ok && c < header.size(); ++c) {
      ok = header[c] == ("v" + std::to_string(c));
    }
    if (!ok) throw StructuralError(path.string() + ":1: bad sensor header for " + std::string(info.name));
  }

  RawStream s;
  s.sensor_id = std::string(info.name);
  s.components = info.components;
  std::int64_t prev_t = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(li + 1);
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != 1 + static_cast<std::size_t>(info.components)) {
      throw StructuralError(ctx + ": expected " + std::to_string(1 + info.components) + " fields");
    }
    const std::int64_t t = parse_int_field(fields[0], ctx);
    if (t < 0) throw StructuralError(ctx + ": negative timestamp");
    if (t <= prev_t) throw StructuralError(ctx + ": timestamps not strictly increasing");
    prev_t = t;

    int n_empty = 0;
    for (int c = 0; c < info.components; ++c) {
      if (fields[1 + static_cast<std::size_t>(c)].empty()) ++n_empty;
    }
    if (n_empty != 0 && n_empty != info.components) {
      throw StructuralError(ctx + ": sample must be fully valued or fully missing");
    }
    s.t_ms.push_back(t);
    s.missing.push_back(n_empty == info.components ? 1 : 0);
    for (int c = 0; c < info.components; ++c) {
      double v = 0.0;
      if (n_empty == 0) {
        v = parse_double_field(fields[1 + static_cast<std::size_t>(c)], ctx);
        if (!std::isfinite(v)) throw StructuralError(ctx + ": non-finite value");
      }
      s.values.push_back(v);
    }
  }
  return s;
}

nlohmann::json load_manifest_json(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw StructuralError("cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  for (const char* key : {"player_id", "duration_ms", "events", "channels"}) {
    if (!j.contains(key)) {
      throw StructuralError(manifest_path.string() + ": manifest missing key '" + key + "'");
    }
  }
  return j;
}

}  // namespace

SessionRecord load_session(const std::filesystem::path& manifest_path) {
  const nlohmann::json j = load_manifest_json(manifest_path);
  const auto base = manifest_path.parent_path();

  SessionRecord rec;
  rec.player_id = j.at("player_id").get<std::string>();
  rec.duration_ms = j.at("duration_ms").get<std::int64_t>();
  if (rec.player_id.empty()) throw StructuralError(manifest_path.string() + ": empty player_id");
  if (rec.duration_ms <= 0) throw StructuralError(manifest_path.string() + ": duration_ms must be positive");

  const auto& channels = j.at("channels");
  for (const auto& [name, _] : channels.items()) {
    if (channel_index(name) == kNumChannels) {
      throw StructuralError(manifest_path.string() + ": unknown channel '" + name + "'");
    }
  }
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const std::string name(kChannels[ch].name);
    if (!channels.contains(name)) {
      throw StructuralError(manifest_path.string() + ": manifest missing channel '" + name + "'");
    }
    const auto path = base / channels.at(name).get<std::string>();
    rec.streams[ch] = load_stream(path, kChannels[ch]);
    for (std::int64_t t : rec.streams[ch].t_ms) {
      if (t > rec.duration_ms) {
        throw StructuralError(path.string() + ": sample timestamp " + std::to_string(t) +
                              " beyond session duration");
      }
    }
  }
  rec.events = load_events(base / j.at("events").get<std::string>(), rec.duration_ms);
  return rec;
}

std::vector<std::filesystem::path> session_file_list(const std::filesystem::path& manifest_path) {
  const nlohmann::json j = load_manifest_json(manifest_path);
  const auto base = manifest_path.parent_path();
  std::vector<std::filesystem::path> files{manifest_path};
  files.push_back(base / j.at("events").get<std::string>());
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const std::string name(kChannels[ch].name);
    if (j.at("channels").contains(name)) {
      files.push_back(base / j.at("channels").at(name).get<std::string>());
    }
  }
  return files;
}

}  // namespace sensecast
