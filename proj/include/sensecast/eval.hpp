#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sensecast/bundle.hpp"
#include "sensecast/dataset.hpp"
#include "sensecast/train.hpp"

namespace sensecast {

// Rank-based (Mann-Whitney) ROC AUC with midrank tie handling:
// P(score+ > score-) + 0.5 P(score+ = score-). Throws MetricUndefined when
// labels hold a single class.
double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct PlayerScores {
  std::string player_id;
  std::vector<int> labels;
  std::vector<double> scores;
};

struct MeanAucOutcome {
  double mean_auc = 0.0;
  std::vector<std::pair<std::string, double>> per_player;
  std::vector<std::string> excluded;  // players with single-class labels
};

// AUC within each player, then the unweighted mean across players. Players
// with single-class labels are excluded and recorded; throws MetricUndefined
// when every player is excluded.
MeanAucOutcome per_player_mean_auc(const std::vector<PlayerScores>& players);

// AUC over all players' bins pooled together; kept in the report so the two
// definitions can be told apart.
double pooled_auc(const std::vector<PlayerScores>& players);

enum class SplitMode { kClassical, kNetwork };

// Repeated random splits of the player roster. Classical models use
// train/test 16/5 over 100 repeats; networks use train/val/test 11/5/5 over
// 15 repeats. Both are configurable.
struct SplitPlan {
  SplitMode mode = SplitMode::kNetwork;
  int repeats = 15;
  int n_train = 11;
  int n_val = 5;
  int n_test = 5;
  std::uint64_t seed = 1;

  static SplitPlan classical(std::uint64_t seed, int repeats = 100);
  static SplitPlan network(std::uint64_t seed, int repeats = 15);
  void validate(std::size_t roster) const;
};

struct RepeatOutcome {
  std::vector<std::string> train_players, val_players, test_players;
  MeanAucOutcome auc;
  std::optional<double> pooled;
  std::optional<double> best_val_auc;                  // networks only
  std::optional<std::array<double, 3>> mean_alpha;     // attention networks only
};

struct EvalReport {
  std::string model;
  double dt_s = 0.0;
  double tau_s = 0.0;
  std::vector<RepeatOutcome> repeats;
  double mean_auc = 0.0;  // mean over repeats of the per-repeat mean
  double sd_auc = 0.0;
  double best_repeat_auc = 0.0;
  std::optional<double> mean_pooled;
  std::optional<std::array<double, 3>> mean_alpha;
};

// Repeated cross-validation of one model at one (dt, tau): split, normalize
// by train statistics, train, score test players, aggregate.
EvalReport run_experiment(const std::vector<PlayerData>& data, ModelType type,
                          const SplitPlan& plan, const TrainConfig& cfg, int workers = 1);

EvalReport run_experiment(const std::vector<SessionRecord>& sessions, ModelType type, double dt_s,
                          double tau_s, const SplitPlan& plan, const TrainConfig& cfg,
                          int workers = 1);

struct SweepResult {
  std::vector<std::string> models;
  std::vector<double> tau_list;  // rows
  std::vector<double> dt_list;   // columns
  // cells[model][tau][dt]
  std::vector<std::vector<std::vector<EvalReport>>> cells;
};

// One run_experiment per (model, tau, dt) cell. Cells are independent, so the
// worker pool changes nothing but wall time.
SweepResult sweep(const std::vector<SessionRecord>& sessions, const std::vector<ModelType>& models,
                  const std::vector<double>& dt_list, const std::vector<double>& tau_list,
                  const SplitPlan& plan, const TrainConfig& cfg, int workers = 1);

// Matrix CSV, tau rows by dt columns, one file per model.
std::string sweep_matrix_csv(const SweepResult& sr, std::size_t model_idx);
// AUC-vs-dt at a fixed tau, and AUC-vs-tau at a fixed dt, all models side by side.
std::string sweep_slice_fixed_tau_csv(const SweepResult& sr, double tau_s);
std::string sweep_slice_fixed_dt_csv(const SweepResult& sr, double dt_s);

std::string report_to_json(const EvalReport& r);
std::string report_to_text(const EvalReport& r);

// Mean attention per feature group over each bundle's own test players'
// valid bins, then over bundles. Bundles must be attention networks.
std::array<double, 3> feature_importance(const std::vector<ModelBundle>& bundles,
                                         const std::vector<PlayerData>& data);

// Per-step table (alpha, h, p, y, yhat) for one player under one bundle.
std::string export_trace_csv(const ModelBundle& bundle, const PlayerData& player);

}  // namespace sensecast
