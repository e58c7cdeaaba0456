#include <doctest.h>

#include <cmath>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"
#include "sensecast/eval.hpp"
#include "sensecast/rng.hpp"
#include "sensecast/synth.hpp"

using namespace sensecast;

TEST_CASE("roc_auc basics") {
  CHECK(roc_auc({0, 1}, {0.2, 0.8}) == 1.0);
  CHECK(roc_auc({0, 1}, {0.5, 0.5}) == 0.5);
  CHECK(roc_auc({1, 0}, {0.2, 0.8}) == 0.0);
  CHECK_THROWS_AS(roc_auc({1, 1}, {0.2, 0.8}), MetricUndefined);
  CHECK_THROWS_AS(roc_auc({0, 0}, {0.2, 0.8}), MetricUndefined);
}

TEST_CASE("roc_auc equals the all-pairs count on random sets") {
  Rng rng(700);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(60));
    std::vector<int> labels;
    std::vector<double> scores;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
      pos += labels.back();
      // Coarse grid to force plenty of ties.
      scores.push_back(static_cast<double>(rng.uniform_int(8)) / 8.0);
    }
    if (pos == 0 || pos == n) continue;

    double wins = 0.0;
    for (int i = 0; i < n; ++i) {
      if (labels[i] != 1) continue;
      for (int j = 0; j < n; ++j) {
        if (labels[j] != 0) continue;
        if (scores[i] > scores[j]) wins += 1.0;
        else if (scores[i] == scores[j]) wins += 0.5;
      }
    }
    const double expected = wins / (static_cast<double>(pos) * (n - pos));
    CHECK(std::abs(roc_auc(labels, scores) - expected) <= 1e-12);
  }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
  Rng rng(701);
  std::vector<int> labels;
  std::vector<double> scores;
  for (int i = 0; i < 50; ++i) {
    labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    scores.push_back(rng.normal());
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> transformed;
  for (double s : scores) transformed.push_back(std::exp(2.0 * s) + 3.0);
  CHECK(roc_auc(labels, scores) == roc_auc(labels, transformed));
}

TEST_CASE("per-player mean is the unweighted average") {
  PlayerScores a{"a", {0, 1}, {0.2, 0.8}};        // AUC 1.0
  PlayerScores b{"b", {0, 1}, {0.5, 0.5}};        // AUC 0.5
  const MeanAucOutcome out = per_player_mean_auc({a, b});
  CHECK(out.mean_auc == 0.75);
  CHECK(out.per_player.size() == 2);
  CHECK(out.excluded.empty());
}

TEST_CASE("single-class players are excluded from the mean") {
  PlayerScores a{"a", {0, 1}, {0.2, 0.8}};
  PlayerScores degenerate{"d", {1, 1}, {0.2, 0.8}};
  const MeanAucOutcome out = per_player_mean_auc({a, degenerate});
  CHECK(out.mean_auc == 1.0);
  REQUIRE(out.excluded.size() == 1);
  CHECK(out.excluded[0] == "d");
  CHECK_THROWS_AS(per_player_mean_auc({degenerate}), MetricUndefined);
}

TEST_CASE("per-player mean differs from pooled AUC on the adversarial fixture") {
  // Each player ranks perfectly inside their own bins, but player b's scores
  // sit uniformly above player a's.
  PlayerScores a{"a", {0, 1}, {0.1, 0.2}};
  PlayerScores b{"b", {0, 1}, {0.8, 0.9}};
  const MeanAucOutcome per_player = per_player_mean_auc({a, b});
  const double pooled = pooled_auc({a, b});
  CHECK(per_player.mean_auc == 1.0);
  CHECK(pooled == 0.75);
  CHECK(per_player.mean_auc != pooled);
}

TEST_CASE("per-player mean ignores player order and within-player duplication") {
  Rng rng(702);
  std::vector<PlayerScores> players;
  for (int p = 0; p < 4; ++p) {
    PlayerScores ps;
    ps.player_id = "p" + std::to_string(p);
    for (int i = 0; i < 30; ++i) {
      ps.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
      ps.scores.push_back(rng.normal());
    }
    ps.labels[0] = 1;
    ps.labels[1] = 0;
    players.push_back(std::move(ps));
  }
  const double base = per_player_mean_auc(players).mean_auc;

  std::vector<PlayerScores> reversed(players.rbegin(), players.rend());
  CHECK(per_player_mean_auc(reversed).mean_auc == doctest::Approx(base).epsilon(1e-15));

  // Duplicating one player's rows changes that player's bin count but not
  // the AUC, hence not the mean.
  std::vector<PlayerScores> duplicated = players;
  duplicated[2].labels.insert(duplicated[2].labels.end(), players[2].labels.begin(),
                              players[2].labels.end());
  duplicated[2].scores.insert(duplicated[2].scores.end(), players[2].scores.begin(),
                              players[2].scores.end());
  CHECK(per_player_mean_auc(duplicated).mean_auc == doctest::Approx(base).epsilon(1e-15));
}

namespace {

SynthConfig small_synth(std::uint64_t seed, double coupling) {
  SynthConfig cfg;
  cfg.n_players = 12;
  cfg.duration_ms = 14 * 60 * 1000;
  cfg.coupling = coupling;
  cfg.rate_scale = 0.05;
  cfg.seed = seed;
  return cfg;
}

std::vector<SessionRecord> records_of(const std::vector<SynthSession>& sessions) {
  std::vector<SessionRecord> out;
  for (const auto& s : sessions) out.push_back(s.record);
  return out;
}

}  // namespace

TEST_CASE("run_experiment is deterministic") {
  const auto sessions = records_of(generate(small_synth(42, 0.5)));
  SplitPlan plan = SplitPlan::classical(9, 4);
  plan.n_train = 8;
  plan.n_test = 4;
  TrainConfig cfg;
  const EvalReport a = run_experiment(sessions, ModelType::kBaseline, 20.0, 120.0, plan, cfg, 1);
  const EvalReport b = run_experiment(sessions, ModelType::kBaseline, 20.0, 120.0, plan, cfg, 2);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(a.repeats.size() == 4);
}

TEST_CASE("baseline on uncoupled data stays near chance") {
  const auto sessions = records_of(generate(small_synth(43, 0.0)));
  SplitPlan plan = SplitPlan::classical(10, 6);
  plan.n_train = 8;
  plan.n_test = 4;
  TrainConfig cfg;
  const EvalReport r = run_experiment(sessions, ModelType::kBaseline, 20.0, 120.0, plan, cfg, 2);
  CHECK(r.mean_auc > 0.43);
  CHECK(r.mean_auc < 0.57);
}

TEST_CASE("normalization statistics ignore non-train players") {
  const auto sessions = records_of(generate(small_synth(44, 0.5)));
  auto data = build_dataset(sessions, 20.0, 120.0);
  std::vector<const PlayerData*> train{&data[0], &data[1], &data[2]};
  const NormStats before = compute_norm_stats(train);
  // Poison every other player's frames.
  for (std::size_t p = 3; p < data.size(); ++p) {
    for (auto& v : data[p].features.frames) v += 1e6;
  }
  const NormStats after = compute_norm_stats(train);
  CHECK(before.mean == after.mean);
  CHECK(before.stddev == after.stddev);
}

TEST_CASE("degenerate feature columns get unit deviation") {
  auto sessions = records_of(generate(small_synth(45, 0.0)));
  auto data = build_dataset(sessions, 20.0, 120.0);
  for (auto& pd : data) {
    for (std::size_t k = 0; k < pd.features.n_bins; ++k) pd.features.at(k, 0) = 7.0;
  }
  const NormStats norm = compute_norm_stats({&data[0], &data[1]});
  CHECK(norm.stddev[0] == 1.0);
  const PlayerSequence seq = make_sequence(data[0], norm);
  for (const auto& x : seq.x) CHECK(x[0] == 0.0);
}

TEST_CASE("sweep of a 1x1 grid equals the direct experiment") {
  const auto sessions = records_of(generate(small_synth(46, 0.5)));
  SplitPlan plan = SplitPlan::classical(11, 3);
  plan.n_train = 8;
  plan.n_test = 4;
  TrainConfig cfg;
  const SweepResult sr =
      sweep(sessions, {ModelType::kBaseline}, {20.0}, {120.0}, plan, cfg, 1);
  const EvalReport direct =
      run_experiment(sessions, ModelType::kBaseline, 20.0, 120.0, plan, cfg, 1);
  CHECK(report_to_json(sr.cells[0][0][0]) == report_to_json(direct));
}

TEST_CASE("sweep output is independent of the worker count") {
  const auto sessions = records_of(generate(small_synth(47, 0.5)));
  SplitPlan plan = SplitPlan::classical(12, 2);
  plan.n_train = 8;
  plan.n_test = 4;
  TrainConfig cfg;
  const auto models = std::vector<ModelType>{ModelType::kBaseline, ModelType::kLogistic};
  const SweepResult a = sweep(sessions, models, {20.0, 30.0}, {60.0, 120.0}, plan, cfg, 1);
  const SweepResult b = sweep(sessions, models, {20.0, 30.0}, {60.0, 120.0}, plan, cfg, 4);
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        CHECK(report_to_json(a.cells[m][t][d]) == report_to_json(b.cells[m][t][d]));
      }
    }
  }
  CHECK(sweep_matrix_csv(a, 0) == sweep_matrix_csv(b, 0));
}

TEST_CASE("sweep matrix has the tau-by-dt shape") {
  const auto sessions = records_of(generate(small_synth(48, 0.0)));
  SplitPlan plan = SplitPlan::classical(13, 1);
  plan.n_train = 8;
  plan.n_test = 4;
  TrainConfig cfg;
  const SweepResult sr =
      sweep(sessions, {ModelType::kBaseline}, {20.0, 30.0}, {60.0, 90.0, 120.0}, plan, cfg, 2);
  const std::string csv = sweep_matrix_csv(sr, 0);
  CHECK(csv.substr(0, csv.find('\n')) == "tau_s,20,30");
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 4);  // header + 3 tau rows
  CHECK(csv.find("\n60,") != std::string::npos);
  CHECK(csv.find("\n120,") != std::string::npos);

  const std::string slice_tau = sweep_slice_fixed_tau_csv(sr, 90.0);
  CHECK(slice_tau.substr(0, slice_tau.find('\n')) == "dt_s,baseline");
  CHECK_THROWS_AS(sweep_slice_fixed_tau_csv(sr, 77.0), ConfigError);
}

TEST_CASE("zero attention weights give importance 0.5 per group") {
  const auto sessions = records_of(generate(small_synth(49, 0.5)));
  const auto data = build_dataset(sessions, 20.0, 120.0);

  ModelBundle b;
  b.type = ModelType::kGruAttention;
  b.dt_s = 20.0;
  b.tau_s = 120.0;
  b.norm = compute_norm_stats({&data[0], &data[1], &data[2]});
  b.network = GruAttentionModel::zeros(GruAttentionConfig{});
  b.test_players = {data[3].player_id, data[4].player_id};

  const auto alpha = feature_importance({b}, data);
  for (double a : alpha) CHECK(a == doctest::Approx(0.5));
}

TEST_CASE("feature importance rejects non-attention bundles") {
  ModelBundle b;
  b.type = ModelType::kGru;
  b.network = GruAttentionModel::zeros(GruAttentionConfig{});
  CHECK_THROWS_AS(feature_importance({b}, {}), ConfigError);
}

TEST_CASE("trace export matches a fresh forward pass") {
  const auto sessions = records_of(generate(small_synth(50, 0.5)));
  const auto data = build_dataset(sessions, 20.0, 120.0);

  ModelBundle b;
  b.type = ModelType::kGruAttention;
  b.dt_s = 20.0;
  b.tau_s = 120.0;
  b.norm = compute_norm_stats({&data[0], &data[1]});
  Rng rng(3);
  b.network = GruAttentionModel::init(GruAttentionConfig{}, rng);

  const std::string csv = export_trace_csv(b, data[2]);
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n' ? 1 : 0;
  CHECK(rows == data[2].features.n_bins + 1);

  // Parse the y_hat column back and compare with a fresh forward pass.
  const PlayerSequence seq = make_sequence(data[2], b.norm);
  const ForwardResult fw = network_forward(*b.network, seq.x);
  std::size_t row = 0;
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const std::size_t end = csv.find('\n', pos);
    const std::string line = csv.substr(pos, end - pos);
    const auto fields = split_csv_line(line);
    const double yhat = parse_double_field(fields.back(), "trace");
    CHECK(yhat == fw.yhat[row]);
    CHECK(yhat > 0.0);
    CHECK(yhat < 1.0);
    pos = end + 1;
    ++row;
  }
  CHECK(row == data[2].features.n_bins);
}
