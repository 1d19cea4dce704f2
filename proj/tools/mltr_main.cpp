/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */

// Command-line entry point: train / evaluate / sweep / inspect-data.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mltr/mltr.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  std::string arms_override;
};

mltr::ExperimentConfig load_config(const CommonFlags& flags) {
  mltr::ExperimentConfig cfg = mltr::load_experiment_config(flags.config_path);
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed_override) cfg.seeds = {*flags.seed_override};
  if (!flags.arms_override.empty()) {
    cfg.arms.clear();
    for (const auto& tok : mltr::detail::split_list(flags.arms_override))
      cfg.arms.push_back(mltr::parse_arm(tok));
    if (cfg.arms.empty()) throw mltr::ConfigError("--arms: empty list");
  }
  return cfg;
}

void print_rows(const std::vector<mltr::ResultRow>& rows) {
  std::printf("%-18s %-11s %-8s %-8s %-6s %8s %8s %8s %8s\n", "arm", "loss",
              "train", "tuning", "seed", "ndcg@1", "ndcg@5", "ndcg@10",
              "skipped");
  for (const auto& r : rows) {
    std::printf("%-18s %-11s %-8s %-8s %-6llu %8.4f %8.4f %8.4f %8zu\n",
                r.arm.c_str(), r.loss.c_str(), r.train_profile.c_str(),
                r.tuning_profile.c_str(),
                static_cast<unsigned long long>(r.seed), r.ndcg1, r.ndcg5,
                r.ndcg10, r.skipped);
  }
}

void print_significance(const std::vector<mltr::SignificanceRow>& rows) {
  if (rows.empty()) return;
  std::printf("\nsignificance (paired two-tailed t-test on per-query "
              "NDCG@10)\n");
  for (const auto& s : rows) {
    std::printf("  %s vs %s [%s/%s seed=%s n=%zu] t=%.4f dof=%ld p=%.4g%s\n",
                s.arm.c_str(), s.vs_arm.c_str(), s.train_profile.c_str(),
                s.tuning_profile.c_str(), s.seed.c_str(), s.pairs,
                s.test.t_statistic, s.test.degrees_of_freedom,
                s.test.p_value,
                s.test.significant_at_0_01 ? "  (significant at 0.01)" : "");
  }
}

int cmd_train(const CommonFlags& flags) {
  auto cfg = load_config(flags);
  const auto data = mltr::load_dataset(cfg);
  auto result = mltr::run_experiment(cfg, data);
  print_rows(result.rows);
  print_significance(result.significance);
  if (!cfg.out_dir.empty()) {
    mltr::emit_report(result, cfg.out_dir);
    std::printf("\nreports written to %s\n", cfg.out_dir.c_str());
  }
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  auto cfg = load_config(flags);
  if (cfg.sweep_train_profiles.empty() || cfg.sweep_tuning_profiles.empty())
    throw mltr::ConfigError(
        "sweep requires sweep_train_profiles and sweep_tuning_profiles");
  const auto data = mltr::load_dataset(cfg);
  auto sweep = mltr::run_sparsity_sweep(cfg, data);
  print_rows(sweep.experiment.rows);
  print_significance(sweep.experiment.significance);
  std::printf("\nrelative NDCG@10 improvement vs %s at %s (per tuning "
              "column)\n",
              sweep.reference_arm.c_str(),
              sweep.reference_train_profile.c_str());
  for (const auto& e : sweep.matrix) {
    std::printf("  %-18s train=%-8s tuning=%-8s ndcg10=%.4f rel=%+.2f%%\n",
                e.arm.c_str(), e.train_profile.c_str(),
                e.tuning_profile.c_str(), e.mean_ndcg10,
                100.0 * e.relative_improvement);
  }
  if (!cfg.out_dir.empty()) {
    mltr::emit_report(sweep.experiment, cfg.out_dir, &sweep);
    std::printf("\nreports written to %s\n", cfg.out_dir.c_str());
  }
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& checkpoint) {
  auto cfg = load_config(flags);
  const auto data = mltr::load_dataset(cfg);

  std::ifstream in(checkpoint, std::ios::binary);
  if (!in)
    throw mltr::DataError("cannot open checkpoint '" + checkpoint + "'");
  const auto ckpt = mltr::load_checkpoint(in);

  const std::uint64_t run_seed = cfg.seeds.front();
  auto split = mltr::split_by_query(
      data, cfg.split_ratios, mltr::detail::split_seed_for(cfg, run_seed));
  mltr::Dataset test =
      cfg.normalize ? mltr::normalize_features(split.test) : split.test;
  const auto splits =
      mltr::build_test_splits(test, cfg.tuning_profile, run_seed);

  mltr::ParameterVector params = ckpt.params;
  if (cfg.finetune_epochs > 0)
    params = mltr::fine_tune(params, test, splits.tuning, cfg.finetune_epochs,
                             cfg.finetune_lr, cfg.loss);
  const auto metrics =
      mltr::evaluate_model(params, test, splits.eval, {1, 5, 10});
  std::printf("checkpoint: %s (tag=%s)\n", checkpoint.c_str(),
              ckpt.tag.c_str());
  std::printf("queries evaluated: %zu, skipped: %zu\n",
              metrics.per_query.size(), metrics.skipped);
  std::printf("ndcg@1=%.4f ndcg@5=%.4f ndcg@10=%.4f\n",
              metrics.aggregate_at(1), metrics.aggregate_at(5),
              metrics.aggregate_at(10));
  return kExitOk;
}

int cmd_inspect(const std::string& data_path, std::optional<int> dims) {
  std::ifstream in(data_path);
  if (!in) throw mltr::DataError("cannot open dataset '" + data_path + "'");
  const auto stats = mltr::inspect_data(in, dims);
  std::printf("dataset: %s\n", data_path.c_str());
  std::printf("queries: %zu\n", stats.queries);
  std::printf("query-item pairs: %zu\n", stats.query_item_pairs);
  if (stats.unique_items > 0)
    std::printf("items: %zu\n", stats.unique_items);
  std::printf("features: %d\n", stats.features);
  std::printf("positives: %.2f%%\n", 100.0 * stats.positive_rate);
  std::printf("range of ratings: %d~%d\n", stats.min_rating,
              stats.max_rating);
  std::printf("mean docs per query: %.2f\n", stats.mean_docs_per_query);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta learning to rank experiment runner"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string checkpoint_path;
  std::string inspect_path;
  std::optional<int> inspect_dims;

  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    sub->add_option("--config", flags.config_path, "experiment config file")
        ->required(config_required);
    sub->add_option("--out", flags.out_dir, "output directory override");
    sub->add_option("--seed", flags.seed_override,
                    "replace the config seed list with one seed");
    sub->add_option("--arms", flags.arms_override,
                    "comma-separated arm list override");
  };

  auto* train = app.add_subcommand("train", "run the experiment protocol");
  add_common(train);

  auto* sweep = app.add_subcommand("sweep", "run the sparsity-grid sweep");
  add_common(sweep);

  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();

  auto* inspect =
      app.add_subcommand("inspect-data", "print corpus statistics");
  inspect->add_option("--data", inspect_path, "LETOR data file")->required();
  inspect->add_option("--dims", inspect_dims, "expected feature dims");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (evaluate->parsed()) return cmd_evaluate(flags, checkpoint_path);
    if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_dims);
    return kExitConfig;
  } catch (const mltr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mltr::NonFiniteLoss& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
}
