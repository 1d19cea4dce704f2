/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_META_TRAINER_HPP_
#define MLTR_META_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mltr/data.hpp"
#include "mltr/dual.hpp"
#include "mltr/errors.hpp"
#include "mltr/evaluation.hpp"
#include "mltr/losses.hpp"
#include "mltr/random.hpp"
#include "mltr/ranker.hpp"

namespace mltr {

enum class GradientMode { kFirstOrder, kFullSecondOrder };

inline std::string to_string(GradientMode m) {
  return m == GradientMode::kFirstOrder ? "first_order" : "full_second_order";
}

inline GradientMode parse_gradient_mode(const std::string& token) {
  if (token == "first_order") return GradientMode::kFirstOrder;
  if (token == "full_second_order") return GradientMode::kFullSecondOrder;
  throw ConfigError("unknown gradient mode '" + token + "'");
}

/*! \brief Hyperparameters of the episodic meta-training loop. K, the items
 *  per inner step, is profile.items() by construction. */
struct MetaConfig {
  double alpha = 0.01;  // inner (query-specific) step size
  double beta = 0.001;  // outer (meta) step size
  int inner_steps = 3;  // T
  int batch_size = 32;  // B
  int epochs = 100;
  LossKind loss;
  GradientMode gradient_mode = GradientMode::kFirstOrder;
  std::uint64_t seed = 0;
  SamplingStrategy strategy;
  SparsityProfile profile;
  // Validation-time fine-tuning: profile for the tuning subsets (defaults to
  // the train profile) and the per-epoch fine-tune budget.
  std::optional<SparsityProfile> val_tuning_profile;
  int val_finetune_epochs = 1;

  int items_per_step() const { return profile.items(); }
  SparsityProfile effective_val_profile() const {
    return val_tuning_profile.value_or(profile);
  }
};

struct EpochRecord {
  int epoch = 0;
  double mean_query_loss = 0.0;  // inner-loop train loss, mean over steps
  double mean_meta_loss = 0.0;   // mean per-query test loss
  double val_ndcg10 = 0.0;
  std::size_t used_queries = 0;
  std::size_t skipped_queries = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_ndcg10 = -1.0;
};

struct TrainResult {
  ParameterVector best_params;   // checkpoint at the best validation epoch
  ParameterVector final_params;  // parameters after the last epoch
  TrainHistory history;
};

/*! \brief Adaptation record kept per query task: the parameters entering
 *  each inner step (needed by the second-order path) and the step losses. */
struct AdaptTrace {
  std::vector<ParameterVector> params_before_step;  // theta_0 .. theta_{T-1}
  std::vector<double> step_losses;
};

namespace detail {

template <typename S>
void gather_labels(const QueryGroup& group,
                   const std::vector<std::size_t>& items,
                   std::vector<int>& labels) {
  labels.clear();
  for (std::size_t i : items) labels.push_back(group.docs[i].relevance);
}

/*! \brief Loss value and its gradient w.r.t. params on one item subset. */
template <typename S>
S loss_and_param_grad(std::span<const S> params,
                      const std::vector<int>& layer_dims, bool with_bias,
                      const QueryGroup& group,
                      const std::vector<std::size_t>& items,
                      const LossKind& loss, std::vector<S>& grad_out) {
  MlpPass<S> pass(layer_dims, with_bias);
  std::vector<S> scores;
  scores.reserve(items.size());
  std::vector<int> labels;
  labels.reserve(items.size());
  for (std::size_t i : items) {
    scores.push_back(pass.forward(params, group.docs[i].features));
    labels.push_back(group.docs[i].relevance);
  }
  const auto out = evaluate_loss(loss, scores, labels);
  grad_out.assign(params.size(), S(0.0));
  // Second pass re-runs forward per item so the activation cache matches.
  for (std::size_t i = 0; i < items.size(); ++i) {
    pass.forward(params, group.docs[items[i]].features);
    pass.backward(params, out.grad[i], grad_out);
  }
  return out.loss;
}

inline std::uint64_t fnv1a_hash(const std::vector<double>& values) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace detail

/*!
 * \brief Inner-loop adaptation: theta_i starts as a copy of theta and takes
 * T sequential steps theta_i -= alpha * grad(query loss on that step's
 * items). The meta parameters are never touched.
 */
inline std::pair<ParameterVector, AdaptTrace> inner_adapt(
    const ParameterVector& theta, const QueryGroup& group,
    const std::vector<std::vector<std::size_t>>& step_sets,
    const MetaConfig& cfg) {
  ParameterVector theta_i = theta;
  AdaptTrace trace;
  trace.params_before_step.reserve(step_sets.size());
  trace.step_losses.reserve(step_sets.size());
  std::vector<double> grad;
  for (std::size_t t = 0; t < step_sets.size(); ++t) {
    trace.params_before_step.push_back(theta_i);
    const double loss = detail::loss_and_param_grad<double>(
        theta_i.values, theta_i.layer_dims, theta_i.with_bias, group,
        step_sets[t], cfg.loss, grad);
    if (!std::isfinite(loss))
      throw NonFiniteLoss(group.query_id, static_cast<int>(t) + 1);
    trace.step_losses.push_back(loss);
    for (std::size_t i = 0; i < theta_i.values.size(); ++i)
      theta_i.values[i] -= cfg.alpha * grad[i];
  }
  return {std::move(theta_i), std::move(trace)};
}

/*! \brief One adapted query task inside a meta batch. */
struct MetaTask {
  const QueryGroup* group = nullptr;
  std::size_t query_index = 0;  // position in the training dataset
  MetaEpisode episode;
  ParameterVector adapted;
  AdaptTrace trace;
};

struct MetaGradient {
  ParameterVector grad;
  double meta_loss = 0.0;
};

/*!
 * \brief Gradient of the meta loss L_meta = (1/B) sum_i L_test,i(theta_i).
 *
 * kFirstOrder evaluates the test-loss gradient at the adapted parameters and
 * stops there. kFullSecondOrder propagates through every inner update: with
 * v_T = grad of the test loss at theta_T, it folds v_{t-1} = v_t - alpha *
 * H_t v_t back to t = 0, where each Hessian-vector product is computed
 * exactly by re-running the loss gradient with dual-number parameters.
 */
inline MetaGradient meta_gradient(const ParameterVector& theta,
                                  const std::vector<MetaTask>& batch,
                                  const MetaConfig& cfg) {
  if (batch.empty()) throw NoUsableQueries("meta_gradient: empty batch");
  MetaGradient out;
  out.grad.layer_dims = theta.layer_dims;
  out.grad.with_bias = theta.with_bias;
  out.grad.values.assign(theta.values.size(), 0.0);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> task_grad;
  std::vector<Dual> dual_params, dual_grad;

  for (const auto& task : batch) {
    const double test_loss = detail::loss_and_param_grad<double>(
        task.adapted.values, theta.layer_dims, theta.with_bias, *task.group,
        task.episode.test, cfg.loss, task_grad);
    if (!std::isfinite(test_loss))
      throw NonFiniteLoss(task.group->query_id, 0);
    out.meta_loss += test_loss * inv_b;

    if (cfg.gradient_mode == GradientMode::kFullSecondOrder) {
      // Backward sweep over the inner trajectory.
      std::vector<double> v = task_grad;
      for (std::size_t t = task.trace.params_before_step.size(); t-- > 0;) {
        const auto& theta_t = task.trace.params_before_step[t];
        dual_params.resize(theta_t.values.size());
        for (std::size_t i = 0; i < dual_params.size(); ++i)
          dual_params[i] = Dual(theta_t.values[i], v[i]);
        detail::loss_and_param_grad<Dual>(
            dual_params, theta.layer_dims, theta.with_bias, *task.group,
            task.episode.step_train[t], cfg.loss, dual_grad);
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] -= cfg.alpha * dual_grad[i].d;  // tangent = (H v)_i
      }
      for (std::size_t i = 0; i < v.size(); ++i)
        out.grad.values[i] += v[i] * inv_b;
    } else {
      for (std::size_t i = 0; i < task_grad.size(); ++i)
        out.grad.values[i] += task_grad[i] * inv_b;
    }
  }
  return out;
}

/*!
 * \brief Pooled fine-tuning: for each epoch, one gradient step per query on
 * its tuning items, all applied to a single parameter copy. epochs = 0
 * returns theta unchanged.
 */
inline ParameterVector fine_tune(
    const ParameterVector& theta, const Dataset& data,
    const std::vector<std::vector<std::size_t>>& tuning_sets, int epochs,
    double lr, const LossKind& loss) {
  if (epochs < 0) throw ConfigError("fine_tune: epochs must be >= 0");
  if (tuning_sets.size() != data.queries.size())
    throw DimensionMismatch("tuning_sets not aligned with dataset queries");
  ParameterVector out = theta;
  std::vector<double> grad;
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t qi = 0; qi < data.queries.size(); ++qi) {
      if (tuning_sets[qi].empty()) continue;
      const double loss_val = detail::loss_and_param_grad<double>(
          out.values, out.layer_dims, out.with_bias, data.queries[qi],
          tuning_sets[qi], loss, grad);
      if (!std::isfinite(loss_val))
        throw NonFiniteLoss(data.queries[qi].query_id, e + 1);
      for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= lr * grad[i];
    }
  }
  return out;
}

/*! \brief Per-query fine-tuning: an independently adapted parameter copy for
 *  every query, each starting from theta. */
inline std::vector<ParameterVector> fine_tune_per_query(
    const ParameterVector& theta, const Dataset& data,
    const std::vector<std::vector<std::size_t>>& tuning_sets, int epochs,
    double lr, const LossKind& loss) {
  if (epochs < 0) throw ConfigError("fine_tune: epochs must be >= 0");
  std::vector<ParameterVector> out;
  out.reserve(data.queries.size());
  std::vector<double> grad;
  for (std::size_t qi = 0; qi < data.queries.size(); ++qi) {
    ParameterVector theta_q = theta;
    if (!tuning_sets[qi].empty()) {
      for (int e = 0; e < epochs; ++e) {
        const double loss_val = detail::loss_and_param_grad<double>(
            theta_q.values, theta_q.layer_dims, theta_q.with_bias,
            data.queries[qi], tuning_sets[qi], loss, grad);
        if (!std::isfinite(loss_val))
          throw NonFiniteLoss(data.queries[qi].query_id, e + 1);
        for (std::size_t i = 0; i < theta_q.values.size(); ++i)
          theta_q.values[i] -= lr * grad[i];
      }
    }
    out.push_back(std::move(theta_q));
  }
  return out;
}

/*! \brief Test-only observation points; both trainers report the episodes
 *  they consume so parity between arms can be asserted directly. */
struct TrainHooks {
  std::function<void(int epoch, std::size_t query_index, const MetaEpisode&)>
      on_episode;
};

namespace detail {

/*! \brief Documented substream derivations shared by both trainers, so the
 *  meta and baseline arms consume identical episode streams per seed. */
inline Rng episode_rng(std::uint64_t seed, int epoch, std::size_t query_index) {
  return Rng(mix_seed({seed, 0x45504953ULL, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(query_index)}));
}
inline Rng shuffle_rng(std::uint64_t seed, int epoch) {
  return Rng(mix_seed({seed, 0x53485546ULL, static_cast<std::uint64_t>(epoch)}));
}
inline Rng validation_rng(std::uint64_t seed, std::size_t query_index) {
  return Rng(mix_seed({seed, 0x56414c44ULL,
                       static_cast<std::uint64_t>(query_index)}));
}

struct ValidationSplit {
  std::vector<std::vector<std::size_t>> tuning;
  std::vector<std::vector<std::size_t>> eval;
};

/*! \brief Fixed validation tuning/eval subsets, sampled once per run.
 *  Queries that cannot satisfy the profile keep empty sets. */
inline ValidationSplit make_validation_split(const Dataset& val,
                                             const SparsityProfile& profile,
                                             std::uint64_t seed) {
  ValidationSplit out;
  out.tuning.resize(val.queries.size());
  out.eval.resize(val.queries.size());
  for (std::size_t qi = 0; qi < val.queries.size(); ++qi) {
    Rng rng = validation_rng(seed, qi);
    try {
      auto split = make_finetune_split(val.queries[qi], profile, rng);
      out.tuning[qi] = std::move(split.tuning);
      out.eval[qi] = std::move(split.eval);
    } catch (const InsufficientItems&) {
      // excluded from validation
    }
  }
  return out;
}

inline double validation_ndcg10(const ParameterVector& theta,
                                const Dataset& val,
                                const ValidationSplit& split,
                                const MetaConfig& cfg) {
  if (val.queries.empty()) return 0.0;
  const ParameterVector tuned =
      fine_tune(theta, val, split.tuning, cfg.val_finetune_epochs, cfg.alpha,
                cfg.loss);
  const auto metrics = evaluate_model(tuned, val, split.eval, {10});
  return metrics.per_query.empty() ? 0.0 : metrics.aggregate[0];
}

}  // namespace detail

/*!
 * \brief Episodic meta-training (batched query tasks, T-step inner
 * adaptation, averaged meta loss, outer update).
 *
 * Per epoch the training queries are visited in a seeded shuffled order in
 * batches of B. Each usable query is adapted from a snapshot of theta, its
 * test subset is drawn under the final-step exclusion rule, and the batch
 * meta gradient (accumulated in ascending query-index order) updates theta
 * with step size beta. After every epoch the validation split is scored
 * (one fine-tuning pass by default) and the best-NDCG@10 parameters are
 * checkpointed.
 */
inline TrainResult meta_train(const Dataset& train, const Dataset& val,
                              const RankerSpec& spec, const MetaConfig& cfg,
                              const TrainHooks& hooks = {}) {
  if (cfg.alpha < 0.0 || cfg.beta < 0.0)
    throw ConfigError("meta_train: alpha and beta must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("meta_train: batch_size >= 1");
  if (cfg.inner_steps < 1) throw ConfigError("meta_train: inner_steps >= 1");

  ParameterVector theta = init_params(spec, cfg.seed);
  const auto val_split = detail::make_validation_split(
      val, cfg.effective_val_profile(), cfg.seed);

  TrainResult result;
  result.history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

  const std::size_t n = train.queries.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = detail::shuffle_rng(cfg.seed, epoch);
    shuffle.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_query_sum = 0.0, loss_meta_sum = 0.0;
    std::size_t meta_batches = 0;

    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end =
          std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
      const std::uint64_t theta_checksum = detail::fnv1a_hash(theta.values);

      std::vector<MetaTask> batch;
      batch.reserve(end - begin);
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t qi = order[b];
        const QueryGroup& group = train.queries[qi];
        Rng rng = detail::episode_rng(cfg.seed, epoch, qi);
        MetaTask task;
        task.group = &group;
        task.query_index = qi;
        try {
          task.episode = make_meta_episode(group, cfg.profile, cfg.strategy,
                                           cfg.inner_steps, rng);
          if (hooks.on_episode) hooks.on_episode(epoch, qi, task.episode);
          auto [adapted, trace] =
              inner_adapt(theta, group, task.episode.step_train, cfg);
          task.adapted = std::move(adapted);
          task.trace = std::move(trace);
        } catch (const InsufficientItems&) {
          ++rec.skipped_queries;
          continue;
        } catch (const NonFiniteLoss&) {
          ++rec.skipped_queries;
          continue;
        }
        batch.push_back(std::move(task));
      }
      if (theta_checksum != detail::fnv1a_hash(theta.values))
        throw std::logic_error(
            "meta parameters mutated during inner adaptation");
      if (batch.empty()) continue;

      // Deterministic reduction order regardless of the shuffle.
      std::sort(batch.begin(), batch.end(),
                [](const MetaTask& a, const MetaTask& b) {
                  return a.query_index < b.query_index;
                });

      MetaGradient mg;
      try {
        mg = meta_gradient(theta, batch, cfg);
      } catch (const NonFiniteLoss&) {
        rec.skipped_queries += batch.size();
        continue;
      }
      for (std::size_t i = 0; i < theta.values.size(); ++i)
        theta.values[i] -= cfg.beta * mg.grad.values[i];

      for (const auto& task : batch) {
        double mean_step = 0.0;
        for (double l : task.trace.step_losses) mean_step += l;
        loss_query_sum += mean_step / task.trace.step_losses.size();
      }
      loss_meta_sum += mg.meta_loss;
      ++meta_batches;
      rec.used_queries += batch.size();
    }

    if (rec.used_queries == 0)
      throw NoUsableQueries("meta_train: every query was skipped in epoch " +
                            std::to_string(epoch));
    rec.mean_query_loss =
        loss_query_sum / static_cast<double>(rec.used_queries);
    rec.mean_meta_loss = loss_meta_sum / static_cast<double>(meta_batches);
    rec.val_ndcg10 = detail::validation_ndcg10(theta, val, val_split, cfg);
    if (rec.val_ndcg10 > result.history.best_val_ndcg10) {
      result.history.best_val_ndcg10 = rec.val_ndcg10;
      result.history.best_epoch = epoch;
      result.best_params = theta;
    }
    result.history.epochs.push_back(rec);
  }
  result.final_params = theta;
  if (result.history.best_epoch < 0) result.best_params = theta;
  return result;
}

/*!
 * \brief Conventional control arm: mini-batch gradient descent of the same
 * loss over the same seed-deterministic episode stream, with no inner/outer
 * split. Every item subset the meta trainer touches (the T step subsets and
 * the held-out test subset) contributes as a plain supervised group; one
 * update per batch with step size alpha.
 */
inline TrainResult baseline_train(const Dataset& train, const Dataset& val,
                                  const RankerSpec& spec,
                                  const MetaConfig& cfg,
                                  const TrainHooks& hooks = {}) {
  if (cfg.alpha < 0.0) throw ConfigError("baseline_train: alpha must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("baseline_train: batch_size >= 1");

  ParameterVector theta = init_params(spec, cfg.seed);
  const auto val_split = detail::make_validation_split(
      val, cfg.effective_val_profile(), cfg.seed);

  TrainResult result;
  const std::size_t n = train.queries.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> grad, batch_grad;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = detail::shuffle_rng(cfg.seed, epoch);
    shuffle.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_train_sum = 0.0, loss_test_sum = 0.0;
    std::size_t test_groups = 0;

    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end =
          std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
      batch_grad.assign(theta.values.size(), 0.0);
      std::size_t groups = 0;

      std::vector<std::pair<std::size_t, MetaEpisode>> episodes;
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t qi = order[b];
        Rng rng = detail::episode_rng(cfg.seed, epoch, qi);
        try {
          MetaEpisode ep = make_meta_episode(
              train.queries[qi], cfg.profile, cfg.strategy, cfg.inner_steps,
              rng);
          if (hooks.on_episode) hooks.on_episode(epoch, qi, ep);
          episodes.emplace_back(qi, std::move(ep));
        } catch (const InsufficientItems&) {
          ++rec.skipped_queries;
        }
      }
      std::sort(episodes.begin(), episodes.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      for (auto& [qi, ep] : episodes) {
        const QueryGroup& group = train.queries[qi];
        bool ok = true;
        double train_loss_acc = 0.0;
        try {
          for (const auto& items : ep.step_train) {
            const double l = detail::loss_and_param_grad<double>(
                theta.values, theta.layer_dims, theta.with_bias, group, items,
                cfg.loss, grad);
            if (!std::isfinite(l)) throw NonFiniteLoss(group.query_id, 0);
            train_loss_acc += l / static_cast<double>(ep.step_train.size());
            for (std::size_t i = 0; i < batch_grad.size(); ++i)
              batch_grad[i] += grad[i];
            ++groups;
          }
          const double lt = detail::loss_and_param_grad<double>(
              theta.values, theta.layer_dims, theta.with_bias, group, ep.test,
              cfg.loss, grad);
          if (!std::isfinite(lt)) throw NonFiniteLoss(group.query_id, 0);
          loss_test_sum += lt;
          ++test_groups;
          for (std::size_t i = 0; i < batch_grad.size(); ++i)
            batch_grad[i] += grad[i];
          ++groups;
        } catch (const NonFiniteLoss&) {
          ok = false;
        }
        if (ok) {
          loss_train_sum += train_loss_acc;
          ++rec.used_queries;
        } else {
          ++rec.skipped_queries;
        }
      }
      if (groups == 0) continue;
      const double scale = cfg.alpha / static_cast<double>(groups);
      for (std::size_t i = 0; i < theta.values.size(); ++i)
        theta.values[i] -= scale * batch_grad[i];
    }

    if (rec.used_queries == 0)
      throw NoUsableQueries(
          "baseline_train: every query was skipped in epoch " +
          std::to_string(epoch));
    rec.mean_query_loss =
        loss_train_sum / static_cast<double>(rec.used_queries);
    rec.mean_meta_loss =
        test_groups ? loss_test_sum / static_cast<double>(test_groups) : 0.0;
    rec.val_ndcg10 = detail::validation_ndcg10(theta, val, val_split, cfg);
    if (rec.val_ndcg10 > result.history.best_val_ndcg10) {
      result.history.best_val_ndcg10 = rec.val_ndcg10;
      result.history.best_epoch = epoch;
      result.best_params = theta;
    }
    result.history.epochs.push_back(rec);
  }
  result.final_params = theta;
  if (result.history.best_epoch < 0) result.best_params = theta;
  return result;
}

}  // namespace mltr

#endif  // MLTR_META_TRAINER_HPP_
