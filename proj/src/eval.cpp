#include "sensecast/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>
#include <nlohmann/json.hpp>

#include "sensecast/csvio.hpp"
#include "sensecast/errors.hpp"
#include "sensecast/rng.hpp"

namespace sensecast {

using nlohmann::json;

double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw ConfigError("roc_auc: size mismatch");
  const std::size_t n = labels.size();
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("roc_auc: labels must be 0/1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricUndefined("single-class label set");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tied scores; rank sum of the positive class.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j + 1;
  }
  const double pos = static_cast<double>(n_pos);
  const double neg = static_cast<double>(n_neg);
  return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

MeanAucOutcome per_player_mean_auc(const std::vector<PlayerScores>& players) {
  MeanAucOutcome out;
  double sum = 0.0;
  for (const auto& p : players) {
    try {
      const double auc = roc_auc(p.labels, p.scores);
      out.per_player.emplace_back(p.player_id, auc);
      sum += auc;
    } catch (const MetricUndefined&) {
      out.excluded.push_back(p.player_id);
    }
  }
  if (out.per_player.empty()) throw MetricUndefined("every player has single-class labels");
  out.mean_auc = sum / static_cast<double>(out.per_player.size());
  return out;
}

double pooled_auc(const std::vector<PlayerScores>& players) {
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& p : players) {
    labels.insert(labels.end(), p.labels.begin(), p.labels.end());
    scores.insert(scores.end(), p.scores.begin(), p.scores.end());
  }
  return roc_auc(labels, scores);
}

SplitPlan SplitPlan::classical(std::uint64_t seed, int repeats) {
  SplitPlan p;
  p.mode = SplitMode::kClassical;
  p.repeats = repeats;
  p.n_train = 16;
  p.n_val = 0;
  p.n_test = 5;
  p.seed = seed;
  return p;
}

SplitPlan SplitPlan::network(std::uint64_t seed, int repeats) {
  SplitPlan p;
  p.mode = SplitMode::kNetwork;
  p.repeats = repeats;
  p.n_train = 11;
  p.n_val = 5;
  p.n_test = 5;
  p.seed = seed;
  return p;
}

void SplitPlan::validate(std::size_t roster) const {
  if (repeats <= 0 || n_train <= 0 || n_test <= 0 || n_val < 0) {
    throw ConfigError("split plan sizes must be positive");
  }
  if (mode == SplitMode::kNetwork && n_val == 0) {
    throw ConfigError("network split plan needs a validation set");
  }
  const std::size_t need = static_cast<std::size_t>(n_train + n_val + n_test);
  if (roster < need) {
    throw ConfigError("roster of " + std::to_string(roster) + " players cannot satisfy split " +
                      std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                      std::to_string(n_test));
  }
}

namespace {

int resolve_workers(int workers, std::size_t jobs) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), jobs));
}

// Runs fn(i) for i in [0, jobs) on a small pool; results must go to
// preallocated slots so the schedule cannot affect the output.
template <typename Fn>
void parallel_for(std::size_t jobs, int workers, Fn&& fn) {
  const int nw = resolve_workers(workers, jobs);
  if (nw <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::array<std::size_t, 2> clock_ms(const PlayerData& pd) {
  return {static_cast<std::size_t>(std::llround(pd.features.dt_s * 1000.0)),
          static_cast<std::size_t>(std::llround(pd.targets.tau_s * 1000.0))};
}

RepeatOutcome evaluate_split(const std::vector<PlayerData>& data,
                             const std::vector<std::size_t>& train_idx,
                             const std::vector<std::size_t>& val_idx,
                             const std::vector<std::size_t>& test_idx, ModelType type,
                             const TrainConfig& cfg) {
  RepeatOutcome out;
  for (auto i : train_idx) out.train_players.push_back(data[i].player_id);
  for (auto i : val_idx) out.val_players.push_back(data[i].player_id);
  for (auto i : test_idx) out.test_players.push_back(data[i].player_id);

  std::vector<const PlayerData*> train_ptrs;
  for (auto i : train_idx) train_ptrs.push_back(&data[i]);
  const NormStats norm = compute_norm_stats(train_ptrs);

  std::vector<PlayerScores> test_scores;

  auto collect_valid = [](const PlayerData& pd, PlayerScores& ps) {
    ps.player_id = pd.player_id;
    for (std::size_t k = 0; k < pd.targets.size(); ++k) {
      if (pd.targets.valid[k]) ps.labels.push_back(pd.targets.y[k]);
    }
  };

  switch (type) {
    case ModelType::kBaseline: {
      for (auto i : test_idx) {
        const PlayerData& pd = data[i];
        const auto [dt_ms, tau_ms] = clock_ms(pd);
        PlayerScores ps;
        collect_valid(pd, ps);
        for (std::size_t k = 0; k < pd.targets.size(); ++k) {
          if (!pd.targets.valid[k]) continue;
          ps.scores.push_back(baseline_predict(pd.events, static_cast<std::int64_t>(k * dt_ms),
                                               static_cast<std::int64_t>(tau_ms)));
        }
        test_scores.push_back(std::move(ps));
      }
      break;
    }
    case ModelType::kLogistic: {
      std::vector<PlayerSequence> train_seqs;
      for (auto i : train_idx) train_seqs.push_back(make_sequence(data[i], norm));
      const LogisticModel model = train_logistic(train_seqs, cfg);
      for (auto i : test_idx) {
        const PlayerData& pd = data[i];
        PlayerSequence seq = make_sequence(pd, norm);
        PlayerScores ps;
        collect_valid(pd, ps);
        for (std::size_t k = 0; k < seq.x.size(); ++k) {
          if (seq.valid[k]) ps.scores.push_back(model.forward(seq.x[k]));
        }
        test_scores.push_back(std::move(ps));
      }
      break;
    }
    case ModelType::kGru:
    case ModelType::kGruAttention: {
      std::vector<PlayerSequence> train_seqs, val_seqs;
      for (auto i : train_idx) train_seqs.push_back(make_sequence(data[i], norm));
      for (auto i : val_idx) val_seqs.push_back(make_sequence(data[i], norm));
      GruAttentionConfig net_cfg;
      net_cfg.use_attention = type == ModelType::kGruAttention;
      TrainLog log;
      const GruAttentionModel model = train_network(net_cfg, train_seqs, val_seqs, cfg, &log);
      if (log.best_epoch > 0) out.best_val_auc = log.best_val_auc;

      std::array<double, 3> alpha_sum{0.0, 0.0, 0.0};
      std::size_t alpha_bins = 0;
      for (auto i : test_idx) {
        const PlayerData& pd = data[i];
        PlayerSequence seq = make_sequence(pd, norm);
        const ForwardResult fw = network_forward(model, seq.x);
        PlayerScores ps;
        collect_valid(pd, ps);
        for (std::size_t k = 0; k < seq.x.size(); ++k) {
          if (!seq.valid[k]) continue;
          ps.scores.push_back(fw.yhat[k]);
          if (net_cfg.use_attention) {
            for (std::size_t g = 0; g < 3; ++g) alpha_sum[g] += fw.alpha[k][g];
            ++alpha_bins;
          }
        }
        test_scores.push_back(std::move(ps));
      }
      if (net_cfg.use_attention && alpha_bins > 0) {
        for (auto& a : alpha_sum) a /= static_cast<double>(alpha_bins);
        out.mean_alpha = alpha_sum;
      }
      break;
    }
  }

  out.auc = per_player_mean_auc(test_scores);
  try {
    out.pooled = pooled_auc(test_scores);
  } catch (const MetricUndefined&) {
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const std::vector<PlayerData>& data, ModelType type,
                          const SplitPlan& plan, const TrainConfig& cfg, int workers) {
  plan.validate(data.size());
  cfg.validate();
  EvalReport report;
  report.model = model_type_name(type);
  if (!data.empty()) {
    report.dt_s = data[0].features.dt_s;
    report.tau_s = data[0].targets.tau_s;
  }
  report.repeats.resize(static_cast<std::size_t>(plan.repeats));

  parallel_for(static_cast<std::size_t>(plan.repeats), workers, [&](std::size_t r) {
    Rng rng(Rng::derive(plan.seed, r));
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
    }
    std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + plan.n_train);
    std::vector<std::size_t> val_idx(perm.begin() + plan.n_train,
                                     perm.begin() + plan.n_train + plan.n_val);
    std::vector<std::size_t> test_idx(perm.begin() + plan.n_train + plan.n_val,
                                      perm.begin() + plan.n_train + plan.n_val + plan.n_test);
    TrainConfig repeat_cfg = cfg;
    repeat_cfg.seed = Rng::derive(cfg.seed, 1000000 + r);
    report.repeats[r] = evaluate_split(data, train_idx, val_idx, test_idx, type, repeat_cfg);
  });

  double sum = 0.0;
  double best = 0.0;
  for (const auto& rep : report.repeats) {
    sum += rep.auc.mean_auc;
    best = std::max(best, rep.auc.mean_auc);
  }
  report.mean_auc = sum / static_cast<double>(report.repeats.size());
  report.best_repeat_auc = best;
  double var = 0.0;
  for (const auto& rep : report.repeats) {
    const double d = rep.auc.mean_auc - report.mean_auc;
    var += d * d;
  }
  report.sd_auc = std::sqrt(var / static_cast<double>(report.repeats.size()));

  double pooled_sum = 0.0;
  std::size_t pooled_n = 0;
  std::array<double, 3> alpha_sum{0.0, 0.0, 0.0};
  std::size_t alpha_n = 0;
  for (const auto& rep : report.repeats) {
    if (rep.pooled) {
      pooled_sum += *rep.pooled;
      ++pooled_n;
    }
    if (rep.mean_alpha) {
      for (std::size_t g = 0; g < 3; ++g) alpha_sum[g] += (*rep.mean_alpha)[g];
      ++alpha_n;
    }
  }
  if (pooled_n > 0) report.mean_pooled = pooled_sum / static_cast<double>(pooled_n);
  if (alpha_n > 0) {
    for (auto& a : alpha_sum) a /= static_cast<double>(alpha_n);
    report.mean_alpha = alpha_sum;
  }
  return report;
}

EvalReport run_experiment(const std::vector<SessionRecord>& sessions, ModelType type, double dt_s,
                          double tau_s, const SplitPlan& plan, const TrainConfig& cfg,
                          int workers) {
  return run_experiment(build_dataset(sessions, dt_s, tau_s), type, plan, cfg, workers);
}

SweepResult sweep(const std::vector<SessionRecord>& sessions, const std::vector<ModelType>& models,
                  const std::vector<double>& dt_list, const std::vector<double>& tau_list,
                  const SplitPlan& plan, const TrainConfig& cfg, int workers) {
  if (models.empty() || dt_list.empty() || tau_list.empty()) {
    throw ConfigError("sweep needs non-empty model, dt, and tau lists");
  }
  SweepResult sr;
  for (auto m : models) sr.models.push_back(model_type_name(m));
  sr.tau_list = tau_list;
  sr.dt_list = dt_list;
  sr.cells.assign(models.size(),
                  std::vector<std::vector<EvalReport>>(
                      tau_list.size(), std::vector<EvalReport>(dt_list.size())));

  // Datasets depend only on (dt, tau); build each grid point once.
  std::vector<std::vector<PlayerData>> datasets(dt_list.size() * tau_list.size());
  parallel_for(datasets.size(), workers, [&](std::size_t i) {
    const double dt = dt_list[i % dt_list.size()];
    const double tau = tau_list[i / dt_list.size()];
    datasets[i] = build_dataset(sessions, dt, tau);
  });

  const std::size_t cells = models.size() * tau_list.size() * dt_list.size();
  parallel_for(cells, workers, [&](std::size_t i) {
    const std::size_t mi = i / (tau_list.size() * dt_list.size());
    const std::size_t rest = i % (tau_list.size() * dt_list.size());
    const std::size_t ti = rest / dt_list.size();
    const std::size_t di = rest % dt_list.size();
    sr.cells[mi][ti][di] =
        run_experiment(datasets[ti * dt_list.size() + di], models[mi], plan, cfg, 1);
  });
  return sr;
}

std::string sweep_matrix_csv(const SweepResult& sr, std::size_t model_idx) {
  std::string out = "tau_s";
  for (double dt : sr.dt_list) {
    out += ',';
    out += format_double(dt);
  }
  out += '\n';
  for (std::size_t t = 0; t < sr.tau_list.size(); ++t) {
    out += format_double(sr.tau_list[t]);
    for (std::size_t d = 0; d < sr.dt_list.size(); ++d) {
      out += ',';
      out += format_double(sr.cells[model_idx][t][d].mean_auc);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::size_t index_of(const std::vector<double>& xs, double x) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == x) return i;
  }
  throw ConfigError("slice anchor " + format_double(x) + " not in sweep grid");
}

}  // namespace

std::string sweep_slice_fixed_tau_csv(const SweepResult& sr, double tau_s) {
  const std::size_t ti = index_of(sr.tau_list, tau_s);
  std::string out = "dt_s";
  for (const auto& m : sr.models) out += "," + m;
  out += '\n';
  for (std::size_t d = 0; d < sr.dt_list.size(); ++d) {
    out += format_double(sr.dt_list[d]);
    for (std::size_t mi = 0; mi < sr.models.size(); ++mi) {
      out += ',';
      out += format_double(sr.cells[mi][ti][d].mean_auc);
    }
    out += '\n';
  }
  return out;
}

std::string sweep_slice_fixed_dt_csv(const SweepResult& sr, double dt_s) {
  const std::size_t di = index_of(sr.dt_list, dt_s);
  std::string out = "tau_s";
  for (const auto& m : sr.models) out += "," + m;
  out += '\n';
  for (std::size_t t = 0; t < sr.tau_list.size(); ++t) {
    out += format_double(sr.tau_list[t]);
    for (std::size_t mi = 0; mi < sr.models.size(); ++mi) {
      out += ',';
      out += format_double(sr.cells[mi][t][di].mean_auc);
    }
    out += '\n';
  }
  return out;
}

std::string report_to_json(const EvalReport& r) {
  json j;
  j["model"] = r.model;
  j["dt_s"] = r.dt_s;
  j["tau_s"] = r.tau_s;
  j["mean_auc"] = r.mean_auc;
  j["sd_auc"] = r.sd_auc;
  j["best_repeat_auc"] = r.best_repeat_auc;
  if (r.mean_pooled) j["mean_pooled_auc"] = *r.mean_pooled;
  if (r.mean_alpha) {
    j["mean_attention"] = {{"physical_activity", (*r.mean_alpha)[0]},
                           {"chair_movement", (*r.mean_alpha)[1]},
                           {"environment", (*r.mean_alpha)[2]}};
  }
  json reps = json::array();
  for (const auto& rep : r.repeats) {
    json e;
    e["train_players"] = rep.train_players;
    e["val_players"] = rep.val_players;
    e["test_players"] = rep.test_players;
    e["mean_auc"] = rep.auc.mean_auc;
    json per = json::object();
    for (const auto& [pid, auc] : rep.auc.per_player) per[pid] = auc;
    e["per_player_auc"] = per;
    e["excluded_players"] = rep.auc.excluded;
    if (rep.pooled) e["pooled_auc"] = *rep.pooled;
    if (rep.best_val_auc) e["best_val_auc"] = *rep.best_val_auc;
    if (rep.mean_alpha) {
      e["mean_attention"] = {(*rep.mean_alpha)[0], (*rep.mean_alpha)[1], (*rep.mean_alpha)[2]};
    }
    reps.push_back(std::move(e));
  }
  j["repeats"] = std::move(reps);
  return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "model %-9s dt %-6g tau %-6g repeats %zu\n", r.model.c_str(),
                r.dt_s, r.tau_s, r.repeats.size());
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "mean per-player AUC %.4f  sd %.4f  best repeat %.4f\n", r.mean_auc, r.sd_auc,
                r.best_repeat_auc);
  out += buf;
  if (r.mean_pooled) {
    std::snprintf(buf, sizeof(buf), "mean pooled AUC     %.4f  (pooled != per-player mean)\n",
                  *r.mean_pooled);
    out += buf;
  }
  if (r.mean_alpha) {
    std::snprintf(buf, sizeof(buf),
                  "mean attention      physical %.3f  chair %.3f  environment %.3f\n",
                  (*r.mean_alpha)[0], (*r.mean_alpha)[1], (*r.mean_alpha)[2]);
    out += buf;
  }
  for (std::size_t i = 0; i < r.repeats.size(); ++i) {
    const auto& rep = r.repeats[i];
    std::snprintf(buf, sizeof(buf), "repeat %3zu  mean AUC %.4f  excluded %zu\n", i,
                  rep.auc.mean_auc, rep.auc.excluded.size());
    out += buf;
  }
  return out;
}

std::array<double, 3> feature_importance(const std::vector<ModelBundle>& bundles,
                                         const std::vector<PlayerData>& data) {
  if (bundles.empty()) throw ConfigError("feature importance needs at least one bundle");
  std::array<double, 3> total{0.0, 0.0, 0.0};
  for (const auto& b : bundles) {
    if (b.type != ModelType::kGruAttention || !b.network) {
      throw ConfigError("feature importance requires attention-network bundles");
    }
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    std::size_t bins = 0;
    for (const auto& pid : b.test_players) {
      const PlayerData* pd = nullptr;
      for (const auto& d : data) {
        if (d.player_id == pid) {
          pd = &d;
          break;
        }
      }
      if (!pd) continue;
      if (std::abs(pd->features.dt_s - b.dt_s) > 1e-9) {
        throw ConfigError("data dt does not match bundle dt");
      }
      PlayerSequence seq = make_sequence(*pd, b.norm);
      const ForwardResult fw = network_forward(*b.network, seq.x);
      for (std::size_t k = 0; k < seq.x.size(); ++k) {
        if (!seq.valid[k]) continue;
        for (std::size_t g = 0; g < 3; ++g) sum[g] += fw.alpha[k][g];
        ++bins;
      }
    }
    if (bins == 0) throw ConfigError("bundle has no test-player bins in the given data");
    for (std::size_t g = 0; g < 3; ++g) total[g] += sum[g] / static_cast<double>(bins);
  }
  for (auto& v : total) v /= static_cast<double>(bundles.size());
  return total;
}

std::string export_trace_csv(const ModelBundle& bundle, const PlayerData& player) {
  if (!bundle.network) throw ConfigError("trace export requires a network bundle");
  if (std::abs(player.features.dt_s - bundle.dt_s) > 1e-9 ||
      std::abs(player.targets.tau_s - bundle.tau_s) > 1e-9) {
    throw ConfigError("player data (dt, tau) does not match bundle");
  }
  PlayerSequence seq = make_sequence(player, bundle.norm);
  const ForwardResult fw = network_forward(*bundle.network, seq.x);
  const std::size_t hid = bundle.network->cfg.hidden_width;

  std::string out = "bin_index,alpha_physical,alpha_chair,alpha_environment";
  for (std::size_t i = 0; i < hid; ++i) out += ",h_" + std::to_string(i);
  out += ",p,y,y_hat\n";
  for (std::size_t k = 0; k < seq.x.size(); ++k) {
    out += std::to_string(k);
    for (std::size_t g = 0; g < 3; ++g) {
      out += ',';
      out += format_double(fw.alpha[k][g]);
    }
    for (std::size_t i = 0; i < hid; ++i) {
      out += ',';
      out += format_double(fw.h[k][i]);
    }
    out += ',';
    if (player.targets.p[k]) out += format_double(*player.targets.p[k]);
    out += ',';
    if (player.targets.valid[k]) out += player.targets.y[k] ? '1' : '0';
    out += ',';
    out += format_double(fw.yhat[k]);
    out += '\n';
  }
  return out;
}

}  // namespace sensecast
