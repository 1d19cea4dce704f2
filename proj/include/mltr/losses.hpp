/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_LOSSES_HPP_
#define MLTR_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mltr/dual.hpp"
#include "mltr/errors.hpp"

namespace mltr {

enum class LossName { kRankMse, kRankNet, kLambdaRank, kListNet };

/*! \brief Loss selector as it appears in configs: "rank_mse" | "ranknet" |
 *  "lambdarank" | "listnet", with an optional sigma for the pairwise pair. */
struct LossKind {
  LossName name = LossName::kRankNet;
  double sigma = 1.0;

  std::string to_string() const {
    switch (name) {
      case LossName::kRankMse: return "rank_mse";
      case LossName::kRankNet: return "ranknet";
      case LossName::kLambdaRank: return "lambdarank";
      case LossName::kListNet: return "listnet";
    }
    return "ranknet";
  }

  static LossKind parse(const std::string& token, double sigma = 1.0) {
    if (sigma <= 0.0) throw ConfigError("sigma must be > 0");
    LossKind k;
    k.sigma = sigma;
    if (token == "rank_mse") k.name = LossName::kRankMse;
    else if (token == "ranknet") k.name = LossName::kRankNet;
    else if (token == "lambdarank") k.name = LossName::kLambdaRank;
    else if (token == "listnet") k.name = LossName::kListNet;
    else throw ConfigError("unknown loss '" + token + "'");
    return k;
  }

  bool operator==(const LossKind&) const = default;
};

/*! \brief Loss value plus its exact gradient with respect to the scores. */
template <typename S>
struct LossOutput {
  S loss{0.0};
  std::vector<S> grad;
};

namespace detail {

// log2(1 + e^t), overflow-safe for large |t|.
template <typename S>
S log2_1p_exp(const S& t) {
  using std::exp;
  using std::log1p;
  constexpr double kLn2 = 0.6931471805599453;
  if (value_of(t) > 0.0) return (t + log1p(exp(-t))) / S(kLn2);
  return log1p(exp(t)) / S(kLn2);
}

// 1 / (1 + e^t), overflow-safe.
template <typename S>
S logistic_neg(const S& t) {
  using std::exp;
  if (value_of(t) > 0.0) {
    const S e = exp(-t);
    return e / (S(1.0) + e);
  }
  return S(1.0) / (S(1.0) + exp(t));
}

inline void check_batch(std::size_t scores, std::size_t labels) {
  if (scores == 0) throw DimensionMismatch("empty score list");
  if (scores != labels)
    throw DimensionMismatch("scores and labels differ in length");
}

}  // namespace detail

/*! \brief Pointwise squared-error loss: sum_j (score_j - label_j)^2. */
template <typename S>
LossOutput<S> rank_mse(const std::vector<S>& scores,
                       const std::vector<int>& labels) {
  detail::check_batch(scores.size(), labels.size());
  LossOutput<S> out;
  out.grad.assign(scores.size(), S(0.0));
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const S diff = scores[j] - S(static_cast<double>(labels[j]));
    out.loss += diff * diff;
    out.grad[j] = S(2.0) * diff;
  }
  return out;
}

/*!
 * \brief Pairwise logistic-cost loss over ordered pairs with label_j >
 * label_s: sum log2(1 + e^{-sigma (score_j - score_s)}).
 */
template <typename S>
LossOutput<S> ranknet(const std::vector<S>& scores,
                      const std::vector<int>& labels, double sigma = 1.0) {
  detail::check_batch(scores.size(), labels.size());
  constexpr double kLn2 = 0.6931471805599453;
  LossOutput<S> out;
  out.grad.assign(scores.size(), S(0.0));
  for (std::size_t j = 0; j < scores.size(); ++j) {
    for (std::size_t s = 0; s < scores.size(); ++s) {
      if (labels[j] <= labels[s]) continue;
      const S u = scores[j] - scores[s];
      out.loss += detail::log2_1p_exp(S(-sigma) * u);
      // d/du log2(1+e^{-sigma u}) = -(sigma/ln2) / (1 + e^{sigma u})
      const S g = S(-sigma / kLn2) * detail::logistic_neg(S(sigma) * u);
      out.grad[j] += g;
      out.grad[s] -= g;
    }
  }
  return out;
}

namespace detail {

inline double ndcg_gain(int relevance) {
  return std::pow(2.0, static_cast<double>(relevance)) - 1.0;
}

// Discount at 0-based rank position.
inline double ndcg_discount(std::size_t rank0) {
  return 1.0 / std::log2(static_cast<double>(rank0) + 2.0);
}

// Indices sorted by descending value part, ties by ascending index.
template <typename S>
std::vector<std::size_t> argsort_desc(const std::vector<S>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return value_of(scores[a]) > value_of(scores[b]);
  });
  return idx;
}

inline double ideal_dcg_full(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    idcg += ndcg_gain(labels[i]) * ndcg_discount(i);
  return idcg;
}

}  // namespace detail

/*!
 * \brief LambdaRank: each RankNet pair term is weighted by the absolute
 * full-list NDCG change of swapping the pair in the current score-induced
 * ranking. The weights are constants of that ranking (standard lambda
 * semantics), so the gradient differentiates only the logistic factors.
 * A list with an all-zero-gain ideal (IDCG = 0) is degenerate: loss 0,
 * gradient 0.
 */
template <typename S>
LossOutput<S> lambdarank(const std::vector<S>& scores,
                         const std::vector<int>& labels, double sigma = 1.0) {
  detail::check_batch(scores.size(), labels.size());
  constexpr double kLn2 = 0.6931471805599453;
  LossOutput<S> out;
  out.grad.assign(scores.size(), S(0.0));

  const double idcg = detail::ideal_dcg_full(labels);
  if (idcg <= 0.0) return out;  // degenerate list

  const auto order = detail::argsort_desc(scores);
  std::vector<std::size_t> rank_of(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r;

  for (std::size_t j = 0; j < scores.size(); ++j) {
    for (std::size_t s = 0; s < scores.size(); ++s) {
      if (labels[j] <= labels[s]) continue;
      const double delta_ndcg =
          std::fabs((detail::ndcg_gain(labels[j]) -
                     detail::ndcg_gain(labels[s])) *
                    (detail::ndcg_discount(rank_of[j]) -
                     detail::ndcg_discount(rank_of[s]))) /
          idcg;
      const S u = scores[j] - scores[s];
      out.loss += S(delta_ndcg) * detail::log2_1p_exp(S(-sigma) * u);
      const S g = S(delta_ndcg) * S(-sigma / kLn2) *
                  detail::logistic_neg(S(sigma) * u);
      out.grad[j] += g;
      out.grad[s] -= g;
    }
  }
  return out;
}

/*!
 * \brief ListNet top-one cross entropy: P = softmax(labels),
 * Q = softmax(scores), loss = -sum P ln Q, gradient Q - P.
 */
template <typename S>
LossOutput<S> listnet(const std::vector<S>& scores,
                      const std::vector<int>& labels) {
  using std::exp;
  using std::log;
  detail::check_batch(scores.size(), labels.size());
  const std::size_t n = scores.size();

  // Target distribution over raw grades (constants).
  std::vector<double> target(n);
  double max_label = *std::max_element(labels.begin(), labels.end());
  double zp = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    target[j] = std::exp(static_cast<double>(labels[j]) - max_label);
    zp += target[j];
  }
  for (auto& p : target) p /= zp;

  // Predicted distribution with max-subtraction.
  S max_score = scores[0];
  for (const auto& s : scores) max_score = (s > max_score) ? s : max_score;
  std::vector<S> shifted(n), q(n);
  S zq(0.0);
  for (std::size_t j = 0; j < n; ++j) {
    shifted[j] = scores[j] - max_score;
    q[j] = exp(shifted[j]);
    zq += q[j];
  }
  const S log_zq = log(zq);

  LossOutput<S> out;
  out.grad.assign(n, S(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    out.loss += S(target[j]) * (log_zq - shifted[j]);
    out.grad[j] = q[j] / zq - S(target[j]);
  }
  return out;
}

/*! \brief Dispatch on the configured loss kind. */
template <typename S>
LossOutput<S> evaluate_loss(const LossKind& kind, const std::vector<S>& scores,
                            const std::vector<int>& labels) {
  switch (kind.name) {
    case LossName::kRankMse: return rank_mse(scores, labels);
    case LossName::kRankNet: return ranknet(scores, labels, kind.sigma);
    case LossName::kLambdaRank: return lambdarank(scores, labels, kind.sigma);
    case LossName::kListNet: return listnet(scores, labels);
  }
  throw ConfigError("unhandled loss kind");
}

}  // namespace mltr

#endif  // MLTR_LOSSES_HPP_
