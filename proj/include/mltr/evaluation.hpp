/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_EVALUATION_HPP_
#define MLTR_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mltr/data.hpp"
#include "mltr/errors.hpp"
#include "mltr/losses.hpp"
#include "mltr/ranker.hpp"

namespace mltr {

/*! \brief DCG@k of labels already in ranked order: gain 2^rel - 1, discount
 *  log2(position + 1) with 1-based positions. */
inline double dcg_at_k(const std::vector<int>& labels_in_ranked_order,
                       std::size_t k) {
  double dcg = 0.0;
  const std::size_t n = std::min(k, labels_in_ranked_order.size());
  for (std::size_t i = 0; i < n; ++i)
    dcg += detail::ndcg_gain(labels_in_ranked_order[i]) *
           detail::ndcg_discount(i);
  return dcg;
}

/*! \brief NDCG@k; 0 when the ideal DCG is zero (no relevant items). */
inline double ndcg_at_k(const std::vector<int>& labels_in_ranked_order,
                        std::size_t k) {
  if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
  if (labels_in_ranked_order.empty())
    throw ConfigError("ndcg_at_k: empty label list");
  std::vector<int> ideal = labels_in_ranked_order;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  const double idcg = dcg_at_k(ideal, k);
  if (idcg <= 0.0) return 0.0;
  return dcg_at_k(labels_in_ranked_order, k) / idcg;
}

/*! \brief Indices sorted by descending score; ties broken by ascending
 *  original index so every metric is reproducible. */
inline std::vector<std::size_t> rank_by_scores(
    const std::vector<double>& scores) {
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("rank_by_scores: non-finite score");
  return detail::argsort_desc(scores);
}

/*! \brief Per-query and aggregate NDCG values for one model arm. */
struct RankingMetrics {
  std::vector<std::size_t> ks;
  // query id -> ndcg@k for each configured k, evaluable queries only
  std::map<std::string, std::vector<double>> per_query;
  std::vector<double> aggregate;  // unweighted means over per_query
  std::size_t skipped = 0;        // empty eval set or zero ideal DCG

  double aggregate_at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] == k) return aggregate[i];
    throw ConfigError("aggregate_at: k not evaluated");
  }
};

/*!
 * \brief Score, rank and evaluate NDCG@k for each query's eval items.
 *
 * eval_sets is aligned with data.queries; queries with an empty eval set or
 * with no relevant eval item (zero ideal DCG) are counted as skipped and
 * excluded from the aggregate means.
 */
inline RankingMetrics evaluate_model(
    const ParameterVector& params, const Dataset& data,
    const std::vector<std::vector<std::size_t>>& eval_sets,
    const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw ConfigError("evaluate_model: no cutoffs given");
  if (eval_sets.size() != data.queries.size())
    throw DimensionMismatch("eval_sets not aligned with dataset queries");

  RankingMetrics metrics;
  metrics.ks = ks;
  metrics.aggregate.assign(ks.size(), 0.0);

  MlpPass<double> pass(params.layer_dims, params.with_bias);
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t evaluated = 0;
  for (std::size_t qi = 0; qi < data.queries.size(); ++qi) {
    const auto& group = data.queries[qi];
    const auto& eval_idx = eval_sets[qi];
    if (eval_idx.empty()) {
      ++metrics.skipped;
      continue;
    }
    scores.clear();
    labels.clear();
    for (std::size_t i : eval_idx) {
      scores.push_back(pass.forward(params.values, group.docs[i].features));
      labels.push_back(group.docs[i].relevance);
    }
    const auto order = rank_by_scores(scores);
    std::vector<int> ranked(labels.size());
    for (std::size_t r = 0; r < order.size(); ++r)
      ranked[r] = labels[order[r]];

    if (detail::ideal_dcg_full(ranked) <= 0.0) {
      ++metrics.skipped;
      continue;
    }
    std::vector<double> vals(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i)
      vals[i] = ndcg_at_k(ranked, ks[i]);
    for (std::size_t i = 0; i < ks.size(); ++i)
      metrics.aggregate[i] += vals[i];
    metrics.per_query.emplace(group.query_id, std::move(vals));
    ++evaluated;
  }
  if (evaluated > 0)
    for (auto& a : metrics.aggregate) a /= static_cast<double>(evaluated);
  return metrics;
}

// ---------------------------------------------------------------------------
// Paired two-tailed t-test via the regularized incomplete beta function.
// ---------------------------------------------------------------------------

namespace detail {

/*! \brief Regularized incomplete beta I_x(a, b) by Lentz's continued
 *  fraction; relative accuracy near machine precision for a, b >= 0.5. */
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  // Symmetry keeps the continued fraction in its fast-converging region.
  if (x > (a + 1.0) / (a + b + 2.0))
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double log_prefactor = a * std::log(x) + b * std::log1p(-x) -
                               std::log(a) -
                               (std::lgamma(a) + std::lgamma(b) -
                                std::lgamma(a + b));

  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 500; ++m) {
    const double dm = static_cast<double>(m);
    // even step
    double numerator = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    f *= c * d;
    // odd step
    numerator = -(a + dm) * (a + b + dm) * x /
                ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefactor) * f;
}

/*! \brief Two-tailed p of a Student t statistic with dof degrees of
 *  freedom: I_{dof/(dof+t^2)}(dof/2, 1/2). */
inline double student_t_two_tailed_p(double t, double dof) {
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

}  // namespace detail

struct TTestResult {
  double t_statistic = 0.0;
  long degrees_of_freedom = 0;
  double p_value = 1.0;
  bool significant_at_0_01 = false;
  bool zero_variance = false;  // differences had no spread; t undefined
};

/*!
 * \brief Paired two-tailed t-test of two parallel per-query metric samples.
 *
 * Zero-variance differences make t undefined (reported NaN): p = 1 and not
 * significant when the mean difference is 0, else p = 0 with the
 * zero_variance flag set.
 */
inline TTestResult paired_t_test(const std::vector<double>& sample_a,
                                 const std::vector<double>& sample_b) {
  if (sample_a.size() != sample_b.size())
    throw DimensionMismatch("paired_t_test: samples differ in length");
  const std::size_t n = sample_a.size();
  if (n < 2) throw ConfigError("paired_t_test: need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += sample_a[i] - sample_b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (sample_a[i] - sample_b[i]) - mean;
    ss += d * d;
  }
  const double variance = ss / static_cast<double>(n - 1);

  TTestResult res;
  res.degrees_of_freedom = static_cast<long>(n) - 1;
  if (variance <= 0.0) {
    res.zero_variance = true;
    res.t_statistic = std::numeric_limits<double>::quiet_NaN();
    if (mean == 0.0) {
      res.p_value = 1.0;
      res.significant_at_0_01 = false;
    } else {
      res.p_value = 0.0;
      res.significant_at_0_01 = true;
    }
    return res;
  }
  res.t_statistic =
      mean / std::sqrt(variance / static_cast<double>(n));
  if (mean == 0.0) res.t_statistic = 0.0;  // exact symmetry for a==-b case
  res.p_value = detail::student_t_two_tailed_p(
      res.t_statistic, static_cast<double>(res.degrees_of_freedom));
  res.significant_at_0_01 = res.p_value < 0.01;
  return res;
}

}  // namespace mltr

#endif  // MLTR_EVALUATION_HPP_
