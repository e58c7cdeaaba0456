#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sensecast/ingest.hpp"
#include "sensecast/model.hpp"

namespace sensecast {

enum class ModelType { kBaseline, kLogistic, kGru, kGruAttention };

std::string model_type_name(ModelType t);
ModelType model_type_from_name(const std::string& name);
bool model_uses_network(ModelType t);

// Streaming replay state: everything needed to resume a replay mid-session.
struct RuntimeState {
  std::size_t next_bin = 0;
  Vec hidden;
};

// One trained predictor plus everything inference needs: normalization
// statistics, the preprocessing statistics (clip bounds, EMG reference),
// the clock parameters, and the players seen at training time.
struct ModelBundle {
  ModelType type = ModelType::kBaseline;
  double dt_s = 0.0;
  double tau_s = 0.0;
  std::uint64_t seed = 0;
  NormStats norm;
  PreprocessStats preprocess;
  std::vector<std::string> train_players, val_players, test_players;
  double best_val_auc = 0.0;

  std::optional<LogisticModel> logistic;
  std::optional<GruAttentionModel> network;
  std::optional<RuntimeState> runtime;
};

// Bit-exact JSON round-trip: doubles are emitted in shortest round-trip form.
std::string bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const std::string& text);

void save_bundle(const std::filesystem::path& path, const ModelBundle& b);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace sensecast
