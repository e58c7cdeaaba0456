#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sensecast/errors.hpp"
#include "sensecast/ingest.hpp"
#include "sensecast/rng.hpp"

using namespace sensecast;

namespace {

RawStream scalar_stream(std::vector<std::int64_t> t, std::vector<double> v,
                        std::vector<std::uint8_t> missing = {}) {
  RawStream s;
  s.sensor_id = "test";
  s.components = 1;
  s.t_ms = std::move(t);
  s.values = std::move(v);
  s.missing = missing.empty() ? std::vector<std::uint8_t>(s.t_ms.size(), 0) : std::move(missing);
  return s;
}

// Brute-force linear-interpolation quantile, written independently.
double quantile_ref(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] * (1.0 - (pos - static_cast<double>(lo))) + v[hi] * (pos - static_cast<double>(lo));
}

}  // namespace

TEST_CASE("clipping bounds extremes and keeps interior values") {
  std::vector<double> vals;
  std::vector<std::int64_t> t;
  for (int i = 1; i <= 200; ++i) {
    vals.push_back(i);
    t.push_back(i * 10);
  }
  ClipBounds bounds;
  const RawStream out = clip_percentiles(scalar_stream(t, vals), 0.005, 0.995, bounds);
  const double p_lo = quantile_ref(vals, 0.005);
  const double p_hi = quantile_ref(vals, 0.995);
  CHECK(bounds.lo[0] == doctest::Approx(p_lo));
  CHECK(bounds.hi[0] == doctest::Approx(p_hi));
  double mn = 1e18, mx = -1e18;
  for (double v : out.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(mn >= p_lo);
  CHECK(mx <= p_hi);
  CHECK(out.values[99] == vals[99]);  // interior untouched
}

TEST_CASE("clipping a constant stream changes nothing") {
  ClipBounds b;
  const RawStream out = clip_percentiles(scalar_stream({0, 10, 20}, {5, 5, 5}), 0.1, 0.9, b);
  for (double v : out.values) CHECK(v == 5.0);
}

TEST_CASE("a lone outlier is clipped to the bulk percentile") {
  std::vector<double> vals(1000, 0.0);
  vals.push_back(1e9);
  std::vector<std::int64_t> t;
  for (std::size_t i = 0; i < vals.size(); ++i) t.push_back(static_cast<std::int64_t>(i));
  ClipBounds b;
  const RawStream out = clip_percentiles(scalar_stream(t, vals), 0.005, 0.995, b);
  CHECK(out.values.back() == doctest::Approx(quantile_ref(vals, 0.995)));
  CHECK(out.values.back() == 0.0);
}

TEST_CASE("clipping is idempotent") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> t;
    std::vector<double> v;
    const int n = 5 + static_cast<int>(rng.uniform_int(100));
    for (int i = 0; i < n; ++i) {
      t.push_back(i * 7);
      v.push_back(rng.normal() * 10.0);
    }
    ClipBounds b1, b2;
    const RawStream once = clip_percentiles(scalar_stream(t, v), 0.05, 0.95, b1);
    const RawStream twice = clip_percentiles(once, 0.05, 0.95, b2);
    for (std::size_t i = 0; i < once.values.size(); ++i) CHECK(once.values[i] == twice.values[i]);
  }
}

TEST_CASE("clipping errors") {
  ClipBounds b;
  RawStream empty = scalar_stream({}, {});
  CHECK_THROWS_AS(clip_percentiles(empty, 0.005, 0.995, b), StructuralError);
  RawStream all_missing = scalar_stream({0, 1}, {1, 2}, {1, 1});
  CHECK_THROWS_AS(clip_percentiles(all_missing, 0.005, 0.995, b), StructuralError);
  RawStream ok = scalar_stream({0}, {1});
  CHECK_THROWS_AS(clip_percentiles(ok, 0.9, 0.1, b), ConfigError);
}

TEST_CASE("trailing smoothing matches the stated example") {
  const RawStream out = smooth_moving_window(scalar_stream({0, 50}, {1, 3}), 100);
  CHECK(out.values[0] == 1.0);
  CHECK(out.values[1] == 2.0);
}

TEST_CASE("single sample smoothing is the identity") {
  const RawStream out = smooth_moving_window(scalar_stream({42}, {7.5}), 100);
  CHECK(out.values[0] == 7.5);
}

TEST_CASE("smoothing preserves a constant stream exactly") {
  std::vector<std::int64_t> t;
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) {
    t.push_back(i * 13);
    v.push_back(3.25);
  }
  const RawStream out = smooth_moving_window(scalar_stream(t, v), 100);
  for (double x : out.values) CHECK(x == 3.25);
}

TEST_CASE("smoothing equals the O(n^2) trailing-mean reference exactly") {
  Rng rng(102);
  std::vector<std::int64_t> t;
  std::vector<double> v;
  std::int64_t ts = 0;
  for (int i = 0; i < 1000; ++i) {
    ts += 1 + static_cast<std::int64_t>(rng.uniform_int(40));
    t.push_back(ts);
    v.push_back(rng.normal());
  }
  const std::int64_t w = 100;
  const RawStream out = smooth_moving_window(scalar_stream(t, v), w);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double sum = 0.0;
    int cnt = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j] > t[i] - w && t[j] <= t[i]) {
        sum += v[j];
        ++cnt;
      }
    }
    CHECK(out.values[i] == sum / cnt);
  }
}

TEST_CASE("mouse increments become euclidean distances") {
  RawStream s;
  s.sensor_id = "mouse_movement";
  s.components = 2;
  s.t_ms = {0, 10};
  s.values = {3.0, 4.0, -6.0, 8.0};
  s.missing = {0, 0};
  const RawStream out = reparametrize(s, ReparamMode::kMouseDistance);
  CHECK(out.values[0] == 5.0);
  CHECK(out.values[1] == 10.0);
}

TEST_CASE("stationary gaze gives zero distances") {
  RawStream s;
  s.sensor_id = "gaze_movement";
  s.components = 2;
  s.t_ms = {0, 10};
  s.values = {0.0, 0.0, 0.0, 0.0};
  s.missing = {0, 0};
  const RawStream out = reparametrize(s, ReparamMode::kGazeDistance);
  CHECK(out.values[0] == 0.0);
  CHECK(out.values[1] == 0.0);
}

TEST_CASE("emg becomes distance to the session median") {
  const RawStream s = scalar_stream({0, 10, 20}, {1, 2, 9});
  const RawStream out = reparametrize(s, ReparamMode::kEmgL1Reference);
  CHECK(out.values[0] == 1.0);
  CHECK(out.values[1] == 0.0);
  CHECK(out.values[2] == 7.0);
}

TEST_CASE("reparametrization rejects wrong component counts") {
  RawStream two = scalar_stream({0}, {1});
  two.components = 2;
  two.values = {1, 2};
  CHECK_THROWS_AS(reparametrize(two, ReparamMode::kEmgL1Reference), StructuralError);
  const RawStream one = scalar_stream({0}, {1});
  CHECK_THROWS_AS(reparametrize(one, ReparamMode::kMouseDistance), StructuralError);
}

TEST_CASE("mouse and gaze distances are nonnegative") {
  Rng rng(103);
  RawStream s;
  s.sensor_id = "m";
  s.components = 2;
  for (int i = 0; i < 300; ++i) {
    s.t_ms.push_back(i * 4);
    s.values.push_back(rng.normal() * 20);
    s.values.push_back(rng.normal() * 20);
    s.missing.push_back(rng.uniform() < 0.1 ? 1 : 0);
  }
  for (auto mode : {ReparamMode::kMouseDistance, ReparamMode::kGazeDistance}) {
    const RawStream out = reparametrize(s, mode);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!out.missing[i]) CHECK(out.values[i] >= 0.0);
    }
  }
}

TEST_CASE("interpolation fills the midpoint") {
  const RawStream s = scalar_stream({0, 10, 20}, {1, 0, 3}, {0, 1, 0});
  const CleanStream out = interpolate_missing(s);
  CHECK(out.v[0] == 1.0);
  CHECK(out.v[1] == 2.0);
  CHECK(out.v[2] == 3.0);
}

TEST_CASE("interpolation copies the nearest value at the edges") {
  const RawStream s = scalar_stream({0, 10, 20, 30}, {0, 7, 9, 0}, {1, 0, 0, 1});
  const CleanStream out = interpolate_missing(s);
  CHECK(out.v[0] == 7.0);
  CHECK(out.v[3] == 9.0);
}

TEST_CASE("interpolation reconstructs a line through random missingness") {
  Rng rng(104);
  RawStream s;
  s.sensor_id = "line";
  s.components = 1;
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t t = i * 5;
    s.t_ms.push_back(t);
    s.values.push_back(static_cast<double>(t));
    s.missing.push_back(rng.uniform() < 0.037 ? 1 : 0);
  }
  s.missing[0] = 0;
  s.missing.back() = 0;
  const CleanStream out = interpolate_missing(s);
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    CHECK(std::abs(out.v[i] - static_cast<double>(s.t_ms[i])) < 1e-12);
  }
}

TEST_CASE("interpolation output agrees with the input at valid samples") {
  Rng rng(105);
  RawStream s;
  s.sensor_id = "x";
  s.components = 1;
  for (int i = 0; i < 500; ++i) {
    s.t_ms.push_back(i * 3 + static_cast<std::int64_t>(rng.uniform_int(2)));
    s.values.push_back(rng.normal());
    s.missing.push_back(rng.uniform() < 0.2 ? 1 : 0);
  }
  // interpolate requires >= 2 valid samples; this has plenty.
  const CleanStream out = interpolate_missing(s);
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    if (!s.missing[i]) CHECK(out.v[i] == s.values[i]);
  }
}

TEST_CASE("interpolation needs at least two valid samples") {
  const RawStream s = scalar_stream({0, 10, 20}, {1, 2, 3}, {1, 0, 1});
  CHECK_THROWS_AS(interpolate_missing(s), StructuralError);
}

namespace {

// Writes a minimal but fully valid session fixture and returns the manifest
// path. Channel values are simple ramps; one channel can be omitted and the
// final event timestamp can be pushed out of bounds to exercise validation.
std::filesystem::path write_fixture(const std::filesystem::path& dir,
                                    const std::string& omit_channel = "",
                                    std::int64_t event_overshoot = 0) {
  std::filesystem::create_directories(dir);
  const std::int64_t duration = 120000;
  std::string manifest = "{\n  \"player_id\": \"p0\",\n  \"duration_ms\": " +
                         std::to_string(duration) + ",\n  \"events\": \"events.csv\"";
  manifest += ",\n  \"channels\": {";
  bool first = true;
  for (const auto& ch : kChannels) {
    const std::string name(ch.name);
    if (name == omit_channel) continue;
    if (!first) manifest += ",";
    first = false;
    manifest += "\n    \"" + name + "\": \"" + name + ".csv\"";

    std::string csv = "timestamp_ms,v1";
    if (ch.components == 2) csv += ",v2";
    csv += "\n";
    for (int i = 0; i < 60; ++i) {
      const std::int64_t t = i * 2000;
      csv += std::to_string(t) + "," + std::to_string(i % 7);
      if (ch.components == 2) csv += "," + std::to_string((i + 3) % 5);
      csv += "\n";
    }
    std::ofstream(dir / (name + ".csv")) << csv;
  }
  manifest += "\n  }\n}\n";
  std::ofstream(dir / "manifest.json") << manifest;

  std::ofstream(dir / "events.csv") << "timestamp_ms,event\n10000,kill\n50000,death\n"
                                    << std::to_string(duration + event_overshoot) << ",kill\n";
  return dir / "manifest.json";
}

}  // namespace

TEST_CASE("well-formed fixture loads with all channels and events") {
  const auto dir = std::filesystem::temp_directory_path() / "sensecast_fixture_ok";
  std::filesystem::remove_all(dir);
  const auto manifest = write_fixture(dir);
  const SessionRecord rec = load_session(manifest);
  CHECK(rec.player_id == "p0");
  CHECK(rec.streams.size() == kNumChannels);
  CHECK(rec.events.size() >= 1);
  CHECK(rec.streams[channel_index("mouse_movement")].components == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest missing a channel names it") {
  const auto dir = std::filesystem::temp_directory_path() / "sensecast_fixture_noco2";
  std::filesystem::remove_all(dir);
  const auto manifest = write_fixture(dir, "co2");
  bool threw = false;
  try {
    load_session(manifest);
  } catch (const StructuralError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("co2") != std::string::npos);
  }
  CHECK(threw);
  std::filesystem::remove_all(dir);
}

TEST_CASE("event beyond the session duration is rejected") {
  const auto dir = std::filesystem::temp_directory_path() / "sensecast_fixture_late";
  std::filesystem::remove_all(dir);
  const auto manifest = write_fixture(dir, "", 1);
  CHECK_THROWS_AS(load_session(manifest), StructuralError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("full preprocessing is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "sensecast_fixture_det";
  std::filesystem::remove_all(dir);
  const auto manifest = write_fixture(dir);
  const SessionRecord rec = load_session(manifest);
  const CleanSession a = preprocess_session(rec);
  const CleanSession b = preprocess_session(rec);
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    REQUIRE(a.streams[ch].v.size() == b.streams[ch].v.size());
    for (std::size_t i = 0; i < a.streams[ch].v.size(); ++i) {
      CHECK(a.streams[ch].v[i] == b.streams[ch].v[i]);
    }
    for (std::size_t i = 0; i < a.streams[ch].v.size(); ++i) {
      CHECK_FALSE(std::isnan(a.streams[ch].v[i]));
    }
  }
  CHECK(a.stats.emg_reference == b.stats.emg_reference);
  std::filesystem::remove_all(dir);
}
