#include "sensecast/bundle.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"

namespace sensecast {

using nlohmann::json;

std::string model_type_name(ModelType t) {
  switch (t) {
    case ModelType::kBaseline: return "baseline";
    case ModelType::kLogistic: return "logreg";
    case ModelType::kGru: return "gru";
    case ModelType::kGruAttention: return "gru-att";
  }
  throw ConfigError("bad model type");
}

ModelType model_type_from_name(const std::string& name) {
  if (name == "baseline") return ModelType::kBaseline;
  if (name == "logreg") return ModelType::kLogistic;
  if (name == "gru") return ModelType::kGru;
  if (name == "gru-att") return ModelType::kGruAttention;
  throw ConfigError("unknown model type '" + name + "'");
}

bool model_uses_network(ModelType t) {
  return t == ModelType::kGru || t == ModelType::kGruAttention;
}

namespace {

json tensors_to_json(std::vector<TensorView> views) {
  json arr = json::array();
  for (const auto& t : views) {
    json e;
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["data"] = std::vector<double>(t.data, t.data + t.size);
    arr.push_back(std::move(e));
  }
  return arr;
}

void tensors_from_json(const json& arr, std::vector<TensorView> views) {
  if (arr.size() != views.size()) throw StructuralError("bundle: parameter tensor count mismatch");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const json& e = arr.at(i);
    if (e.at("name").get<std::string>() != views[i].name) {
      throw StructuralError("bundle: unexpected tensor '" + e.at("name").get<std::string>() + "'");
    }
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    if (shape != views[i].shape) throw StructuralError("bundle: shape mismatch for " + views[i].name);
    const auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != views[i].size) throw StructuralError("bundle: data size mismatch for " + views[i].name);
    std::copy(data.begin(), data.end(), views[i].data);
  }
}

json clip_to_json(const PreprocessStats& stats) {
  json channels = json::object();
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    json e;
    e["lo"] = stats.clip[ch].lo;
    e["hi"] = stats.clip[ch].hi;
    channels[std::string(kChannels[ch].name)] = std::move(e);
  }
  json out;
  out["clip"] = std::move(channels);
  out["emg_reference"] = stats.emg_reference;
  return out;
}

PreprocessStats clip_from_json(const json& j) {
  PreprocessStats stats;
  const json& channels = j.at("clip");
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const json& e = channels.at(std::string(kChannels[ch].name));
    stats.clip[ch].lo = e.at("lo").get<std::vector<double>>();
    stats.clip[ch].hi = e.at("hi").get<std::vector<double>>();
  }
  stats.emg_reference = j.at("emg_reference").get<double>();
  return stats;
}

}  // namespace

std::string bundle_to_json(const ModelBundle& b) {
  json j;
  j["model_type"] = model_type_name(b.type);
  json hp;
  hp["dt_s"] = b.dt_s;
  hp["tau_s"] = b.tau_s;
  if (b.network) {
    hp["group_sizes"] = b.network->cfg.group_sizes;
    hp["encoder_width"] = b.network->cfg.encoder_width;
    hp["hidden_width"] = b.network->cfg.hidden_width;
    hp["head_width"] = b.network->cfg.head_width;
    hp["use_attention"] = b.network->cfg.use_attention;
  }
  j["hyperparameters"] = std::move(hp);
  j["seed"] = b.seed;
  j["norm_stats"] = {{"mean", b.norm.mean}, {"stddev", b.norm.stddev}};
  j["preprocess"] = clip_to_json(b.preprocess);
  j["players"] = {{"train", b.train_players}, {"val", b.val_players}, {"test", b.test_players}};
  j["best_val_auc"] = b.best_val_auc;

  if (b.type == ModelType::kLogistic) {
    if (!b.logistic) throw ConfigError("logistic bundle without parameters");
    auto copy = *b.logistic;
    j["parameters"] = tensors_to_json(copy.tensors());
  } else if (model_uses_network(b.type)) {
    if (!b.network) throw ConfigError("network bundle without parameters");
    auto copy = *b.network;
    j["parameters"] = tensors_to_json(copy.tensors());
  } else {
    j["parameters"] = json::array();
  }

  if (b.runtime) {
    j["runtime_state"] = {{"next_bin", b.runtime->next_bin}, {"hidden", b.runtime->hidden}};
  }
  return j.dump(2) + "\n";
}

ModelBundle bundle_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw StructuralError(std::string("bundle: invalid JSON: ") + e.what());
  }
  ModelBundle b;
  try {
    b.type = model_type_from_name(j.at("model_type").get<std::string>());
    const json& hp = j.at("hyperparameters");
    b.dt_s = hp.at("dt_s").get<double>();
    b.tau_s = hp.at("tau_s").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.norm.mean = j.at("norm_stats").at("mean").get<Vec>();
    b.norm.stddev = j.at("norm_stats").at("stddev").get<Vec>();
    b.preprocess = clip_from_json(j.at("preprocess"));
    b.train_players = j.at("players").at("train").get<std::vector<std::string>>();
    b.val_players = j.at("players").at("val").get<std::vector<std::string>>();
    b.test_players = j.at("players").at("test").get<std::vector<std::string>>();
    b.best_val_auc = j.value("best_val_auc", 0.0);

    if (b.type == ModelType::kLogistic) {
      LogisticModel lm(b.norm.mean.size());
      tensors_from_json(j.at("parameters"), lm.tensors());
      b.logistic = std::move(lm);
    } else if (model_uses_network(b.type)) {
      GruAttentionConfig cfg;
      cfg.group_sizes = hp.at("group_sizes").get<std::vector<std::size_t>>();
      cfg.encoder_width = hp.at("encoder_width").get<std::size_t>();
      cfg.hidden_width = hp.at("hidden_width").get<std::size_t>();
      cfg.head_width = hp.at("head_width").get<std::size_t>();
      cfg.use_attention = hp.at("use_attention").get<bool>();
      GruAttentionModel net = GruAttentionModel::zeros(cfg);
      tensors_from_json(j.at("parameters"), net.tensors());
      b.network = std::move(net);
    }

    if (j.contains("runtime_state")) {
      RuntimeState rs;
      rs.next_bin = j.at("runtime_state").at("next_bin").get<std::size_t>();
      rs.hidden = j.at("runtime_state").at("hidden").get<Vec>();
      b.runtime = std::move(rs);
    }
  } catch (const json::exception& e) {
    throw StructuralError(std::string("bundle: missing or bad field: ") + e.what());
  }
  return b;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& b) {
  write_file_atomic(path, bundle_to_json(b));
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open bundle " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bundle_from_json(text);
}

}  // namespace sensecast
