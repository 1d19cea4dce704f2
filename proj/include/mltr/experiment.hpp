/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_EXPERIMENT_HPP_
#define MLTR_EXPERIMENT_HPP_

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mltr/data.hpp"
#include "mltr/errors.hpp"
#include "mltr/evaluation.hpp"
#include "mltr/letor_io.hpp"
#include "mltr/losses.hpp"
#include "mltr/meta_trainer.hpp"
#include "mltr/ranker.hpp"

namespace mltr {

enum class Arm { kLtr, kLtrSmote, kMltrNoFinetune, kMltrFinetune };

inline std::string arm_name(Arm a) {
  switch (a) {
    case Arm::kLtr: return "LTR";
    case Arm::kLtrSmote: return "LTR+SMOTE";
    case Arm::kMltrNoFinetune: return "MLTR_no_finetune";
    case Arm::kMltrFinetune: return "MLTR_finetune";
  }
  return "LTR";
}

inline Arm parse_arm(const std::string& token) {
  if (token == "LTR") return Arm::kLtr;
  if (token == "LTR+SMOTE") return Arm::kLtrSmote;
  if (token == "MLTR_no_finetune") return Arm::kMltrNoFinetune;
  if (token == "MLTR_finetune") return Arm::kMltrFinetune;
  throw ConfigError("unknown arm '" + token + "'");
}

/*! \brief Arms sharing one trained model: both MLTR arms reuse a single
 *  meta-training run; the index feeds the per-cell seed derivation, so
 *  adding or removing arms never perturbs the other arms' randomness. */
inline int arm_training_group(Arm a) {
  switch (a) {
    case Arm::kLtr: return 0;
    case Arm::kLtrSmote: return 1;
    case Arm::kMltrNoFinetune:
    case Arm::kMltrFinetune: return 2;
  }
  return 0;
}

enum class FinetuneMode { kPooled, kPerQuery };

/*!
 * \brief Full description of one experiment, read from a flat key = value
 * config file (see parse_experiment_config for the key list).
 */
struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name;
  std::optional<int> expected_dims;
  bool normalize = true;
  SplitRatios split_ratios;
  std::optional<std::uint64_t> split_seed;  // fixed split when set

  std::vector<int> hidden_dims = {64, 32};
  LossKind loss = LossKind::parse("ranknet");
  double alpha = 0.01;
  double beta = 0.001;
  int inner_steps = 3;
  int batch_size = 32;
  int epochs = 100;
  GradientMode gradient_mode = GradientMode::kFirstOrder;
  SamplingStrategy strategy;

  SparsityProfile train_profile{1, 9};
  SparsityProfile tuning_profile{1, 9};
  int val_finetune_epochs = 1;
  int finetune_epochs = 10;
  double finetune_lr = 0.01;
  FinetuneMode finetune_mode = FinetuneMode::kPooled;

  std::vector<std::size_t> eval_ks = {1, 5, 10};
  std::vector<Arm> arms = {Arm::kLtr, Arm::kMltrFinetune};
  std::vector<std::uint64_t> seeds = {1};

  int smote_k_neighbors = 5;
  double smote_multiplier = 1.0;

  std::string out_dir;

  // sweep-only keys
  std::vector<SparsityProfile> sweep_train_profiles;
  std::vector<SparsityProfile> sweep_tuning_profiles;
  std::string sweep_reference_arm = "LTR";
  std::optional<SparsityProfile> sweep_reference_train_profile;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  std::stringstream ss(v);
  T out;
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw ConfigError(key + ": invalid number '" + v + "'");
  return out;
}

inline std::uint64_t fnv1a_str(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/*!
 * \brief Parse the experiment config format: one `key = value` pair per
 * line, `#` starts a comment, lists are comma-separated. Unknown keys are
 * errors so hyperparameter typos cannot silently invalidate a comparison.
 */
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::optional<double> sigma;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::string> seen;

  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    if (!seen.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");

    if (key == "dataset_path") cfg.dataset_path = value;
    else if (key == "dataset_name") cfg.dataset_name = value;
    else if (key == "expected_dims")
      cfg.expected_dims = detail::parse_number<int>(value, key);
    else if (key == "normalize") cfg.normalize = detail::parse_bool(value, key);
    else if (key == "split_ratios") {
      auto parts = detail::split_list(value);
      if (parts.size() != 3)
        throw ConfigError("split_ratios: expected 3 comma-separated values");
      cfg.split_ratios.train = detail::parse_number<double>(parts[0], key);
      cfg.split_ratios.val = detail::parse_number<double>(parts[1], key);
      cfg.split_ratios.test = detail::parse_number<double>(parts[2], key);
    } else if (key == "split_seed")
      cfg.split_seed = detail::parse_number<std::uint64_t>(value, key);
    else if (key == "hidden_dims") {
      cfg.hidden_dims.clear();
      for (const auto& p : detail::split_list(value))
        cfg.hidden_dims.push_back(detail::parse_number<int>(p, key));
    } else if (key == "loss") cfg.loss = LossKind::parse(value);
    else if (key == "sigma") sigma = detail::parse_number<double>(value, key);
    else if (key == "alpha") cfg.alpha = detail::parse_number<double>(value, key);
    else if (key == "beta") cfg.beta = detail::parse_number<double>(value, key);
    else if (key == "inner_steps")
      cfg.inner_steps = detail::parse_number<int>(value, key);
    else if (key == "batch_size")
      cfg.batch_size = detail::parse_number<int>(value, key);
    else if (key == "epochs") cfg.epochs = detail::parse_number<int>(value, key);
    else if (key == "gradient_mode") cfg.gradient_mode = parse_gradient_mode(value);
    else if (key == "strategy") cfg.strategy = SamplingStrategy::parse(value);
    else if (key == "train_profile")
      cfg.train_profile = SparsityProfile::parse(value);
    else if (key == "tuning_profile")
      cfg.tuning_profile = SparsityProfile::parse(value);
    else if (key == "val_finetune_epochs")
      cfg.val_finetune_epochs = detail::parse_number<int>(value, key);
    else if (key == "finetune_epochs")
      cfg.finetune_epochs = detail::parse_number<int>(value, key);
    else if (key == "finetune_lr")
      cfg.finetune_lr = detail::parse_number<double>(value, key);
    else if (key == "finetune_mode") {
      if (value == "pooled") cfg.finetune_mode = FinetuneMode::kPooled;
      else if (value == "per_query") cfg.finetune_mode = FinetuneMode::kPerQuery;
      else throw ConfigError("finetune_mode: expected pooled or per_query");
    } else if (key == "eval_ks") {
      cfg.eval_ks.clear();
      for (const auto& p : detail::split_list(value))
        cfg.eval_ks.push_back(detail::parse_number<std::size_t>(p, key));
    } else if (key == "arms") {
      cfg.arms.clear();
      for (const auto& p : detail::split_list(value))
        cfg.arms.push_back(parse_arm(p));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& p : detail::split_list(value))
        cfg.seeds.push_back(detail::parse_number<std::uint64_t>(p, key));
    } else if (key == "smote_k_neighbors")
      cfg.smote_k_neighbors = detail::parse_number<int>(value, key);
    else if (key == "smote_multiplier")
      cfg.smote_multiplier = detail::parse_number<double>(value, key);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "sweep_train_profiles") {
      for (const auto& p : detail::split_list(value))
        cfg.sweep_train_profiles.push_back(SparsityProfile::parse(p));
    } else if (key == "sweep_tuning_profiles") {
      for (const auto& p : detail::split_list(value))
        cfg.sweep_tuning_profiles.push_back(SparsityProfile::parse(p));
    } else if (key == "sweep_reference_arm") {
      parse_arm(value);  // validate
      cfg.sweep_reference_arm = value;
    } else if (key == "sweep_reference_train_profile")
      cfg.sweep_reference_train_profile = SparsityProfile::parse(value);
    else
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
  }
  if (sigma) {
    if (*sigma <= 0.0) throw ConfigError("sigma must be > 0");
    cfg.loss.sigma = *sigma;
  }
  if (cfg.arms.empty()) throw ConfigError("arms must be non-empty");
  if (cfg.seeds.empty()) throw ConfigError("seeds must be non-empty");
  for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}})
    if (std::find(cfg.eval_ks.begin(), cfg.eval_ks.end(), k) ==
        cfg.eval_ks.end())
      throw ConfigError("eval_ks must include 1, 5 and 10 (report schema)");
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

/*! \brief One report line; the CSV schema is
 *  arm,loss,train_profile,tuning_profile,seed,ndcg1,ndcg5,ndcg10,skipped,seconds */
struct ResultRow {
  std::string arm;
  std::string loss;
  std::string train_profile;
  std::string tuning_profile;
  std::uint64_t seed = 0;
  double ndcg1 = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::size_t skipped = 0;
  double seconds = 0.0;
};

struct SignificanceRow {
  std::string arm;       // the MLTR arm under test
  std::string vs_arm;    // the matching control arm
  std::string train_profile;
  std::string tuning_profile;
  std::string seed;      // a seed value, or "all" for the pooled test
  std::size_t pairs = 0;
  TTestResult test;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<RankingMetrics> row_metrics;  // parallel to rows
  std::vector<SignificanceRow> significance;
};

// ---------------------------------------------------------------------------
// Seed derivations (documented): every cell stream mixes the run seed with a
// fixed tag plus the indices that are allowed to influence it. Splits and
// meta-test subsets never see the arm index, so all arms of a cell compare
// on identical data.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t split_seed_for(const ExperimentConfig& cfg,
                                    std::uint64_t run_seed) {
  return cfg.split_seed ? *cfg.split_seed
                        : mix_seed({run_seed, 0x53504c54ULL});  // "SPLT"
}

inline Rng test_split_rng(std::uint64_t run_seed,
                          const SparsityProfile& tuning_profile,
                          std::size_t query_index) {
  return Rng(mix_seed({run_seed, 0x54535054ULL,
                       fnv1a_str(tuning_profile.to_string()),
                       static_cast<std::uint64_t>(query_index)}));
}

inline std::uint64_t train_seed_for(std::uint64_t run_seed, int arm_group,
                                    const SparsityProfile& train_profile,
                                    const SparsityProfile& tuning_profile) {
  return mix_seed({run_seed, 0x5452414eULL,
                   static_cast<std::uint64_t>(arm_group),
                   fnv1a_str(train_profile.to_string()),
                   fnv1a_str(tuning_profile.to_string())});
}

inline Rng smote_rng(std::uint64_t run_seed,
                     const SparsityProfile& train_profile) {
  return Rng(mix_seed({run_seed, 0x534d4f54ULL,
                       fnv1a_str(train_profile.to_string())}));
}

}  // namespace detail

/*! \brief Meta-test tuning/eval index sets for every query of the test
 *  split. Queries that cannot satisfy the tuning profile keep empty sets
 *  and are excluded from evaluation. Identical across arms by construction. */
struct TestSplits {
  std::vector<std::vector<std::size_t>> tuning;
  std::vector<std::vector<std::size_t>> eval;
  std::size_t infeasible = 0;
};

inline TestSplits build_test_splits(const Dataset& test,
                                    const SparsityProfile& tuning_profile,
                                    std::uint64_t run_seed) {
  TestSplits out;
  out.tuning.resize(test.queries.size());
  out.eval.resize(test.queries.size());
  for (std::size_t qi = 0; qi < test.queries.size(); ++qi) {
    Rng rng = detail::test_split_rng(run_seed, tuning_profile, qi);
    try {
      auto split = make_finetune_split(test.queries[qi], tuning_profile, rng);
      out.tuning[qi] = std::move(split.tuning);
      out.eval[qi] = std::move(split.eval);
    } catch (const InsufficientItems&) {
      ++out.infeasible;
    }
  }
  return out;
}

namespace detail {

struct CellData {
  Dataset train, val, test;
  TestSplits splits;
};

inline CellData prepare_cell_data(const ExperimentConfig& cfg,
                                  const Dataset& raw, std::uint64_t run_seed,
                                  const SparsityProfile& tuning_profile) {
  CellData cell;
  auto split =
      split_by_query(raw, cfg.split_ratios, split_seed_for(cfg, run_seed));
  if (cfg.normalize) {
    cell.train = normalize_features(split.train);
    cell.val = normalize_features(split.val);
    cell.test = normalize_features(split.test);
  } else {
    cell.train = std::move(split.train);
    cell.val = std::move(split.val);
    cell.test = std::move(split.test);
  }
  cell.splits = build_test_splits(cell.test, tuning_profile, run_seed);
  return cell;
}

inline MetaConfig make_meta_config(const ExperimentConfig& cfg,
                                   std::uint64_t train_seed,
                                   const SparsityProfile& train_profile,
                                   const SparsityProfile& tuning_profile) {
  MetaConfig m;
  m.alpha = cfg.alpha;
  m.beta = cfg.beta;
  m.inner_steps = cfg.inner_steps;
  m.batch_size = cfg.batch_size;
  m.epochs = cfg.epochs;
  m.loss = cfg.loss;
  m.gradient_mode = cfg.gradient_mode;
  m.seed = train_seed;
  m.strategy = cfg.strategy;
  m.profile = train_profile;
  m.val_tuning_profile = tuning_profile;
  m.val_finetune_epochs = cfg.val_finetune_epochs;
  return m;
}

inline double elapsed_seconds(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace detail

/*!
 * \brief Run one (train profile, tuning profile) cell of the experiment for
 * all seeds and arms; the core of run_experiment and run_sparsity_sweep.
 *
 * Trained models are cached per arm-group so MLTR_finetune and
 * MLTR_no_finetune evaluate the same checkpoint, matching the way the two
 * report blocks differ only by the fine-tuning flag.
 */
inline void run_cell(const ExperimentConfig& cfg, const Dataset& raw,
                     const SparsityProfile& train_profile,
                     const SparsityProfile& tuning_profile,
                     ExperimentResult& out) {
  const RankerSpec spec = RankerSpec::mlp(raw.feature_dims, cfg.hidden_dims);

  for (std::uint64_t run_seed : cfg.seeds) {
    const auto cell =
        detail::prepare_cell_data(cfg, raw, run_seed, tuning_profile);

    struct Trained {
      TrainResult result;
      double seconds = 0.0;
      std::uint64_t train_seed = 0;
    };
    std::map<int, Trained> trained;  // arm group -> model

    auto train_group = [&](int group) -> Trained& {
      auto it = trained.find(group);
      if (it != trained.end()) return it->second;
      const std::uint64_t train_seed = detail::train_seed_for(
          run_seed, group, train_profile, tuning_profile);
      const MetaConfig mcfg =
          detail::make_meta_config(cfg, train_seed, train_profile,
                                   tuning_profile);
      const auto start = std::chrono::steady_clock::now();
      Trained t;
      t.train_seed = train_seed;
      if (group == 2) {
        t.result = meta_train(cell.train, cell.val, spec, mcfg);
      } else if (group == 1) {
        Rng rng = detail::smote_rng(run_seed, train_profile);
        const Dataset augmented = smote_augment_dataset(
            cell.train, cfg.smote_k_neighbors, cfg.smote_multiplier, rng);
        t.result = baseline_train(augmented, cell.val, spec, mcfg);
      } else {
        t.result = baseline_train(cell.train, cell.val, spec, mcfg);
      }
      t.seconds = detail::elapsed_seconds(start);
      return trained.emplace(group, std::move(t)).first->second;
    };

    for (Arm arm : cfg.arms) {
      const int group = arm_training_group(arm);
      Trained& model = train_group(group);
      const auto start = std::chrono::steady_clock::now();

      RankingMetrics metrics;
      const int ft_epochs =
          (arm == Arm::kMltrNoFinetune) ? 0 : cfg.finetune_epochs;
      if (cfg.finetune_mode == FinetuneMode::kPerQuery && ft_epochs > 0) {
        const auto per_query = fine_tune_per_query(
            model.result.best_params, cell.test, cell.splits.tuning,
            ft_epochs, cfg.finetune_lr, cfg.loss);
        // Evaluate each query under its own adapted parameters.
        metrics.ks = {1, 5, 10};
        metrics.aggregate.assign(3, 0.0);
        std::size_t evaluated = 0;
        std::vector<std::vector<std::size_t>> single(cell.test.queries.size());
        for (std::size_t qi = 0; qi < cell.test.queries.size(); ++qi) {
          single[qi] = cell.splits.eval[qi];
          auto m = evaluate_model(per_query[qi], cell.test, single, {1, 5, 10});
          single[qi].clear();
          if (m.per_query.empty()) {
            ++metrics.skipped;
            continue;
          }
          const auto& vals = m.per_query.begin()->second;
          for (std::size_t i = 0; i < 3; ++i) metrics.aggregate[i] += vals[i];
          metrics.per_query.emplace(cell.test.queries[qi].query_id, vals);
          ++evaluated;
        }
        if (evaluated)
          for (auto& a : metrics.aggregate)
            a /= static_cast<double>(evaluated);
      } else {
        const ParameterVector final_params =
            ft_epochs > 0
                ? fine_tune(model.result.best_params, cell.test,
                            cell.splits.tuning, ft_epochs, cfg.finetune_lr,
                            cfg.loss)
                : model.result.best_params;
        metrics =
            evaluate_model(final_params, cell.test, cell.splits.eval, {1, 5, 10});
      }

      ResultRow row;
      row.arm = arm_name(arm);
      row.loss = cfg.loss.to_string();
      row.train_profile = train_profile.to_string();
      row.tuning_profile = tuning_profile.to_string();
      row.seed = run_seed;
      row.ndcg1 = metrics.aggregate_at(1);
      row.ndcg5 = metrics.aggregate_at(5);
      row.ndcg10 = metrics.aggregate_at(10);
      // Infeasible tuning splits leave empty eval sets, so evaluate_model
      // already counts them; no separate term needed.
      row.skipped = metrics.skipped;
      row.seconds = model.seconds + detail::elapsed_seconds(start);
      out.rows.push_back(std::move(row));
      out.row_metrics.push_back(std::move(metrics));
    }

    // Persist checkpoints so `evaluate` and downstream checks can reload the
    // exact trained parameters.
    if (!cfg.out_dir.empty()) {
      namespace fs = std::filesystem;
      fs::create_directories(fs::path(cfg.out_dir) / "checkpoints");
      for (const auto& [group, model] : trained) {
        const std::string base =
            "group" + std::to_string(group) + "_" + train_profile.to_string() +
            "_" + tuning_profile.to_string() + "_seed" +
            std::to_string(run_seed);
        const fs::path ckpt_path =
            fs::path(cfg.out_dir) / "checkpoints" / (base + ".ckpt");
        std::ofstream os(ckpt_path, std::ios::binary);
        Checkpoint ckpt;
        ckpt.params = model.result.best_params;
        ckpt.seed = model.train_seed;
        ckpt.tag = "mlp";
        save_checkpoint(ckpt, os);

        nlohmann::json sidecar;
        sidecar["format_version"] = 1;
        sidecar["best_epoch"] = model.result.history.best_epoch;
        sidecar["best_val_ndcg10"] = model.result.history.best_val_ndcg10;
        sidecar["train_seed"] = model.train_seed;
        sidecar["run_seed"] = run_seed;
        sidecar["arm_group"] = group;
        sidecar["loss"] = cfg.loss.to_string();
        sidecar["train_profile"] = train_profile.to_string();
        sidecar["tuning_profile"] = tuning_profile.to_string();
        std::ofstream js(fs::path(cfg.out_dir) / "checkpoints" /
                         (base + ".json"));
        js << sidecar.dump(2) << '\n';
      }
    }
  }
}

namespace detail {

/*! \brief Paired t-tests of each MLTR arm against LTR over per-query
 *  NDCG@10, per seed and pooled over seeds. */
inline void append_significance(const ExperimentConfig& cfg,
                                ExperimentResult& out,
                                const std::string& train_profile,
                                const std::string& tuning_profile) {
  auto find_metrics = [&](const std::string& arm, std::uint64_t seed)
      -> const RankingMetrics* {
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      const auto& r = out.rows[i];
      if (r.arm == arm && r.seed == seed &&
          r.train_profile == train_profile &&
          r.tuning_profile == tuning_profile)
        return &out.row_metrics[i];
    }
    return nullptr;
  };

  const bool has_ltr =
      std::find(cfg.arms.begin(), cfg.arms.end(), Arm::kLtr) != cfg.arms.end();
  if (!has_ltr) return;

  for (Arm arm : cfg.arms) {
    if (arm != Arm::kMltrFinetune && arm != Arm::kMltrNoFinetune) continue;
    std::vector<double> pooled_a, pooled_b;
    for (std::uint64_t seed : cfg.seeds) {
      const auto* ma = find_metrics(arm_name(arm), seed);
      const auto* mb = find_metrics("LTR", seed);
      if (!ma || !mb) continue;
      std::vector<double> a, b;
      for (const auto& [qid, vals] : ma->per_query) {
        auto it = mb->per_query.find(qid);
        if (it == mb->per_query.end()) continue;
        a.push_back(vals[2]);        // ndcg@10
        b.push_back(it->second[2]);
      }
      pooled_a.insert(pooled_a.end(), a.begin(), a.end());
      pooled_b.insert(pooled_b.end(), b.begin(), b.end());
      if (a.size() >= 2) {
        SignificanceRow s;
        s.arm = arm_name(arm);
        s.vs_arm = "LTR";
        s.train_profile = train_profile;
        s.tuning_profile = tuning_profile;
        s.seed = std::to_string(seed);
        s.pairs = a.size();
        s.test = paired_t_test(a, b);
        out.significance.push_back(std::move(s));
      }
    }
    if (cfg.seeds.size() > 1 && pooled_a.size() >= 2) {
      SignificanceRow s;
      s.arm = arm_name(arm);
      s.vs_arm = "LTR";
      s.train_profile = train_profile;
      s.tuning_profile = tuning_profile;
      s.seed = "all";
      s.pairs = pooled_a.size();
      s.test = paired_t_test(pooled_a, pooled_b);
      out.significance.push_back(std::move(s));
    }
  }
}

}  // namespace detail

/*! \brief Load, validate and tag the configured dataset. */
inline Dataset load_dataset(const ExperimentConfig& cfg) {
  std::ifstream in(cfg.dataset_path);
  if (!in) throw DataError("cannot open dataset '" + cfg.dataset_path + "'");
  const std::string name =
      cfg.dataset_name.empty()
          ? std::filesystem::path(cfg.dataset_path).stem().string()
          : cfg.dataset_name;
  return parse_dataset(in, cfg.expected_dims, name);
}

/*!
 * \brief The single-cell experiment protocol: split, normalize, sample,
 * train each arm, fine-tune (epochs = 0 for the no-fine-tune arm), evaluate
 * on the per-query eval remainders, and test significance against LTR.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const Dataset& raw) {
  ExperimentResult out;
  run_cell(cfg, raw, cfg.train_profile, cfg.tuning_profile, out);
  detail::append_significance(cfg, out, cfg.train_profile.to_string(),
                              cfg.tuning_profile.to_string());
  return out;
}

/*! \brief One entry of the sweep's relative-improvement matrix. */
struct SweepMatrixEntry {
  std::string arm;
  std::string train_profile;
  std::string tuning_profile;
  double mean_ndcg10 = 0.0;            // over seeds
  double relative_improvement = 0.0;   // vs the reference cell, same column
};

struct SweepResult {
  ExperimentResult experiment;
  std::vector<SweepMatrixEntry> matrix;
  std::string reference_arm;
  std::string reference_train_profile;
};

/*! \brief Sparsest profile = smallest share of positives per episode. */
inline SparsityProfile sparsest_profile(
    const std::vector<SparsityProfile>& profiles) {
  if (profiles.empty()) throw ConfigError("profile list must be non-empty");
  SparsityProfile best = profiles.front();
  double best_share = static_cast<double>(best.positives) / best.items();
  for (const auto& p : profiles) {
    const double share = static_cast<double>(p.positives) / p.items();
    if (share < best_share) {
      best = p;
      best_share = share;
    }
  }
  return best;
}

/*!
 * \brief Full cross product of train profiles x tuning profiles x arms, plus
 * the relative NDCG@10 improvement of every (arm, train profile) against a
 * reference cell (default: LTR at the sparsest train profile) within the
 * same tuning-profile column.
 */
inline SweepResult run_sparsity_sweep(const ExperimentConfig& cfg,
                                      const Dataset& raw) {
  const auto train_profiles = cfg.sweep_train_profiles.empty()
                                  ? std::vector<SparsityProfile>{cfg.train_profile}
                                  : cfg.sweep_train_profiles;
  const auto tuning_profiles =
      cfg.sweep_tuning_profiles.empty()
          ? std::vector<SparsityProfile>{cfg.tuning_profile}
          : cfg.sweep_tuning_profiles;

  SweepResult sweep;
  sweep.reference_arm = cfg.sweep_reference_arm;
  sweep.reference_train_profile =
      cfg.sweep_reference_train_profile.value_or(
          sparsest_profile(train_profiles)).to_string();

  for (const auto& tp : train_profiles) {
    for (const auto& up : tuning_profiles) {
      run_cell(cfg, raw, tp, up, sweep.experiment);
      detail::append_significance(cfg, sweep.experiment, tp.to_string(),
                                  up.to_string());
    }
  }

  auto mean_ndcg10 = [&](const std::string& arm, const std::string& tp,
                         const std::string& up) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : sweep.experiment.rows) {
      if (r.arm == arm && r.train_profile == tp && r.tuning_profile == up) {
        sum += r.ndcg10;
        ++n;
      }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
  };

  for (Arm arm : cfg.arms) {
    for (const auto& tp : train_profiles) {
      for (const auto& up : tuning_profiles) {
        SweepMatrixEntry e;
        e.arm = arm_name(arm);
        e.train_profile = tp.to_string();
        e.tuning_profile = up.to_string();
        e.mean_ndcg10 = mean_ndcg10(e.arm, e.train_profile, e.tuning_profile);
        const double ref = mean_ndcg10(sweep.reference_arm,
                                       sweep.reference_train_profile,
                                       e.tuning_profile);
        e.relative_improvement =
            ref > 0.0 ? (e.mean_ndcg10 - ref) / ref : 0.0;
        sweep.matrix.push_back(std::move(e));
      }
    }
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Report emission: CSV with 6-decimal floats, JSON-lines at full precision,
// identical field names.
// ---------------------------------------------------------------------------

inline void write_rows_csv(const std::vector<ResultRow>& rows,
                           std::ostream& out) {
  out << "arm,loss,train_profile,tuning_profile,seed,ndcg1,ndcg5,ndcg10,"
         "skipped,seconds\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.arm << ',' << r.loss << ',' << r.train_profile << ','
        << r.tuning_profile << ',' << r.seed;
    for (double v : {r.ndcg1, r.ndcg5, r.ndcg10}) {
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.6f", r.seconds);
    out << ',' << r.skipped << ',' << buf << '\n';
  }
}

inline nlohmann::json row_to_json(const ResultRow& r) {
  return nlohmann::json{{"arm", r.arm},
                        {"loss", r.loss},
                        {"train_profile", r.train_profile},
                        {"tuning_profile", r.tuning_profile},
                        {"seed", r.seed},
                        {"ndcg1", r.ndcg1},
                        {"ndcg5", r.ndcg5},
                        {"ndcg10", r.ndcg10},
                        {"skipped", r.skipped},
                        {"seconds", r.seconds}};
}

inline void write_rows_jsonl(const std::vector<ResultRow>& rows,
                             std::ostream& out) {
  for (const auto& r : rows) out << row_to_json(r).dump() << '\n';
}

inline void write_significance_csv(const std::vector<SignificanceRow>& rows,
                                   std::ostream& out) {
  out << "arm,vs_arm,train_profile,tuning_profile,seed,pairs,t,dof,p,"
         "significant_at_0_01,zero_variance\n";
  char buf[64];
  for (const auto& s : rows) {
    out << s.arm << ',' << s.vs_arm << ',' << s.train_profile << ','
        << s.tuning_profile << ',' << s.seed << ',' << s.pairs;
    std::snprintf(buf, sizeof(buf), "%.6f", s.test.t_statistic);
    out << ',' << buf << ',' << s.test.degrees_of_freedom;
    std::snprintf(buf, sizeof(buf), "%.6g", s.test.p_value);
    out << ',' << buf << ',' << (s.test.significant_at_0_01 ? 1 : 0) << ','
        << (s.test.zero_variance ? 1 : 0) << '\n';
  }
}

inline void write_significance_jsonl(const std::vector<SignificanceRow>& rows,
                                     std::ostream& out) {
  for (const auto& s : rows) {
    nlohmann::json j{{"arm", s.arm},
                     {"vs_arm", s.vs_arm},
                     {"train_profile", s.train_profile},
                     {"tuning_profile", s.tuning_profile},
                     {"seed", s.seed},
                     {"pairs", s.pairs},
                     {"dof", s.test.degrees_of_freedom},
                     {"p", s.test.p_value},
                     {"significant_at_0_01", s.test.significant_at_0_01},
                     {"zero_variance", s.test.zero_variance}};
    if (std::isfinite(s.test.t_statistic)) j["t"] = s.test.t_statistic;
    else j["t"] = nullptr;
    out << j.dump() << '\n';
  }
}

inline void write_sweep_matrix_csv(const SweepResult& sweep,
                                   std::ostream& out) {
  out << "arm,train_profile,tuning_profile,mean_ndcg10,"
         "relative_improvement\n";
  char buf[64];
  for (const auto& e : sweep.matrix) {
    out << e.arm << ',' << e.train_profile << ',' << e.tuning_profile;
    std::snprintf(buf, sizeof(buf), "%.6f", e.mean_ndcg10);
    out << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.6f", e.relative_improvement);
    out << ',' << buf << '\n';
  }
}

/*! \brief Write results.csv / results.jsonl plus the significance table
 *  (and the sweep matrix when given) under out_dir. */
inline void emit_report(const ExperimentResult& result,
                        const std::string& out_dir,
                        const SweepResult* sweep = nullptr) {
  if (result.rows.empty()) throw DataError("emit_report: no rows to write");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(out_dir) / name);
    if (!f) throw DataError(std::string("cannot write ") + name);
    return f;
  };
  {
    auto f = open("results.csv");
    write_rows_csv(result.rows, f);
  }
  {
    auto f = open("results.jsonl");
    write_rows_jsonl(result.rows, f);
  }
  {
    auto f = open("significance.csv");
    write_significance_csv(result.significance, f);
  }
  {
    auto f = open("significance.jsonl");
    write_significance_jsonl(result.significance, f);
  }
  if (sweep) {
    auto f = open("sweep_matrix.csv");
    write_sweep_matrix_csv(*sweep, f);
  }
}

// ---------------------------------------------------------------------------
// Corpus statistics (the `inspect-data` subcommand).
// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t queries = 0;
  std::size_t query_item_pairs = 0;
  std::size_t unique_items = 0;  // 0 when no docid comments were present
  int features = 0;
  double positive_rate = 0.0;
  int min_rating = 0;
  int max_rating = 0;
  double mean_docs_per_query = 0.0;
};

/*! \brief Table-style corpus statistics straight from a LETOR stream.
 *  Unique items are counted from `docid = X` comment annotations when the
 *  corpus carries them. */
inline CorpusStats inspect_data(std::istream& in,
                                std::optional<int> expected_dims = {}) {
  CorpusStats stats;
  std::string line;
  std::size_t line_no = 0;
  std::size_t positives = 0;
  int max_index = 0;
  bool first = true;
  std::unordered_map<std::string, std::size_t> qid_count;
  std::unordered_map<std::string, bool> docids;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    if (blank) continue;
    RawRecord rec = parse_record(line, line_no);
    ++stats.query_item_pairs;
    ++qid_count[rec.query_id];
    if (label_is_positive(rec.relevance)) ++positives;
    if (first) {
      stats.min_rating = stats.max_rating = rec.relevance;
      first = false;
    } else {
      stats.min_rating = std::min(stats.min_rating, rec.relevance);
      stats.max_rating = std::max(stats.max_rating, rec.relevance);
    }
    if (!rec.features.empty())
      max_index = std::max(max_index, rec.features.rbegin()->first);
    const std::size_t at = rec.comment.find("docid = ");
    if (at != std::string::npos) {
      std::string tok = rec.comment.substr(at + 8);
      const std::size_t sp = tok.find(' ');
      if (sp != std::string::npos) tok = tok.substr(0, sp);
      docids[tok] = true;
    }
  }
  stats.queries = qid_count.size();
  stats.unique_items = docids.size();
  stats.features = expected_dims.value_or(max_index);
  if (stats.query_item_pairs > 0) {
    stats.positive_rate = static_cast<double>(positives) /
                          static_cast<double>(stats.query_item_pairs);
    stats.mean_docs_per_query = static_cast<double>(stats.query_item_pairs) /
                                static_cast<double>(stats.queries);
  }
  return stats;
}

}  // namespace mltr

#endif  // MLTR_EXPERIMENT_HPP_
