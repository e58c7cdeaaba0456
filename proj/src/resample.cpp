#include "sensecast/resample.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"

namespace sensecast {

FeatureSeries resample(const CleanSession& session, double dt_s) {
  if (!(dt_s > 0.0)) throw ConfigError("dt must be positive");
  const auto dt_ms = static_cast<std::int64_t>(std::llround(dt_s * 1000.0));
  if (dt_ms <= 0) throw ConfigError("dt too small");

  FeatureSeries fs;
  fs.player_id = session.player_id;
  fs.dt_s = dt_s;
  fs.t0_ms = 0;
  fs.n_bins = static_cast<std::size_t>(session.duration_ms / dt_ms);
  fs.frames.assign(fs.n_bins * kNumChannels, 0.0);
  if (fs.n_bins == 0) return fs;

  std::vector<double> bin_sum(fs.n_bins);
  std::vector<std::size_t> bin_count(fs.n_bins);

  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const CleanStream& s = session.streams[ch];
    std::fill(bin_sum.begin(), bin_sum.end(), 0.0);
    std::fill(bin_count.begin(), bin_count.end(), 0);
    for (std::size_t i = 0; i < s.t_ms.size(); ++i) {
      const std::int64_t bin = s.t_ms[i] / dt_ms;
      if (bin < 0 || static_cast<std::size_t>(bin) >= fs.n_bins) continue;
      bin_sum[static_cast<std::size_t>(bin)] += s.v[i];
      bin_count[static_cast<std::size_t>(bin)] += 1;
    }

    if (kChannels[ch].agg == AggKind::kSum) {
      for (std::size_t k = 0; k < fs.n_bins; ++k) fs.at(k, ch) = bin_sum[k];
      continue;
    }

    // Mean aggregation with the empty-bin fill policy.
    const std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t prev = npos;
    std::vector<std::size_t> prev_filled(fs.n_bins, npos), next_filled(fs.n_bins, npos);
    for (std::size_t k = 0; k < fs.n_bins; ++k) {
      if (bin_count[k] > 0) prev = k;
      prev_filled[k] = prev;
    }
    std::size_t nxt = npos;
    for (std::size_t k = fs.n_bins; k-- > 0;) {
      if (bin_count[k] > 0) nxt = k;
      next_filled[k] = nxt;
    }
    if (prev == npos) {
      throw StructuralError("channel " + std::string(kChannels[ch].name) +
                            " has no samples in any bin");
    }
    for (std::size_t k = 0; k < fs.n_bins; ++k) {
      if (bin_count[k] > 0) {
        fs.at(k, ch) = bin_sum[k] / static_cast<double>(bin_count[k]);
        continue;
      }
      const std::size_t p = prev_filled[k];
      const std::size_t q = next_filled[k];
      if (p == npos) {
        fs.at(k, ch) = bin_sum[q] / static_cast<double>(bin_count[q]);
      } else if (q == npos) {
        fs.at(k, ch) = bin_sum[p] / static_cast<double>(bin_count[p]);
      } else {
        const double vp = bin_sum[p] / static_cast<double>(bin_count[p]);
        const double vq = bin_sum[q] / static_cast<double>(bin_count[q]);
        fs.at(k, ch) = vp + (vq - vp) * static_cast<double>(k - p) / static_cast<double>(q - p);
      }
    }
  }
  return fs;
}

std::string feature_series_to_csv(const FeatureSeries& fs) {
  std::string out = "bin_index";
  for (const auto& ch : kChannels) {
    out += ',';
    out += ch.name;
  }
  out += '\n';
  for (std::size_t k = 0; k < fs.n_bins; ++k) {
    out += std::to_string(k);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      out += ',';
      out += format_double(fs.at(k, c));
    }
    out += '\n';
  }
  return out;
}

FeatureSeries feature_series_from_csv(const std::filesystem::path& path, double dt_s,
                                      const std::string& player_id) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw StructuralError(path.string() + ": empty feature file");
  {
    auto header = split_csv_line(lines[0]);
    bool ok = header.size() == 1 + kNumChannels && header[0] == "bin_index";
    for (std::size_t c = 0; ok && c < kNumChannels; ++c) {
      ok = header[c + 1] == kChannels[c].name;
    }
    if (!ok) throw StructuralError(path.string() + ":1: bad feature header");
  }
  FeatureSeries fs;
  fs.player_id = player_id;
  fs.dt_s = dt_s;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(li + 1);
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != 1 + kNumChannels) throw StructuralError(ctx + ": wrong field count");
    if (parse_int_field(fields[0], ctx) != static_cast<std::int64_t>(fs.n_bins)) {
      throw StructuralError(ctx + ": bin_index out of order");
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      fs.frames.push_back(parse_double_field(fields[1 + c], ctx));
    }
    ++fs.n_bins;
  }
  return fs;
}

std::string feature_sidecar_json(const FeatureSeries& fs) {
  nlohmann::json j;
  j["dt_s"] = fs.dt_s;
  nlohmann::json kinds = nlohmann::json::object();
  for (const auto& ch : kChannels) {
    kinds[std::string(ch.name)] = ch.agg == AggKind::kSum ? "sum" : "mean";
  }
  j["column_kinds"] = kinds;
  return j.dump(2) + "\n";
}

}  // namespace sensecast
