/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_DATA_HPP_
#define MLTR_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mltr/errors.hpp"
#include "mltr/random.hpp"

namespace mltr {

struct Document {
  std::vector<double> features;  // dense, 0-based
  int relevance = 0;             // graded, >= 0
};

struct QueryGroup {
  std::string query_id;
  std::vector<Document> docs;

  std::size_t size() const { return docs.size(); }
};

struct Dataset {
  std::string name;
  int feature_dims = 0;
  std::vector<QueryGroup> queries;

  std::size_t total_documents() const {
    std::size_t n = 0;
    for (const auto& q : queries) n += q.docs.size();
    return n;
  }
};

/*! \brief Positive/negative item counts of a pXnY sparsity profile.
 *  Serializes as "p1n9" etc., the exact tokens used in configs and reports. */
struct SparsityProfile {
  int positives = 1;
  int negatives = 9;

  int items() const { return positives + negatives; }

  std::string to_string() const {
    return "p" + std::to_string(positives) + "n" + std::to_string(negatives);
  }

  static SparsityProfile parse(const std::string& token) {
    auto fail = [&] {
      throw ConfigError("invalid sparsity profile '" + token +
                        "' (expected e.g. \"p1n9\")");
    };
    if (token.size() < 4 || token[0] != 'p') fail();
    std::size_t npos = token.find('n', 1);
    if (npos == std::string::npos || npos == 1 || npos + 1 >= token.size())
      fail();
    SparsityProfile p;
    try {
      std::size_t used = 0;
      p.positives = std::stoi(token.substr(1, npos - 1), &used);
      if (used != npos - 1) fail();
      p.negatives = std::stoi(token.substr(npos + 1), &used);
      if (used != token.size() - npos - 1) fail();
    } catch (const std::logic_error&) {
      fail();
    }
    if (p.positives < 1 || p.negatives < 1) fail();
    return p;
  }

  bool operator==(const SparsityProfile&) const = default;
};

enum class SamplerKind { kFixed, kOnePositive, kMultiplePositive };

/*! \brief Controls how the per-step item subsets of a meta episode are drawn:
 *  kFixed reuses one subset for every inner step, the other kinds resample
 *  each step with the stated positive count (total step size stays K). */
struct SamplingStrategy {
  SamplerKind kind = SamplerKind::kFixed;
  int positives_per_step = 1;  // only consulted by kMultiplePositive

  std::string to_string() const {
    switch (kind) {
      case SamplerKind::kFixed: return "fixed";
      case SamplerKind::kOnePositive: return "one_positive";
      case SamplerKind::kMultiplePositive:
        return "multiple_positive:" + std::to_string(positives_per_step);
    }
    return "fixed";
  }

  static SamplingStrategy parse(const std::string& token) {
    if (token == "fixed") return {SamplerKind::kFixed, 1};
    if (token == "one_positive") return {SamplerKind::kOnePositive, 1};
    const std::string prefix = "multiple_positive:";
    if (token.rfind(prefix, 0) == 0) {
      int p = 0;
      try {
        p = std::stoi(token.substr(prefix.size()));
      } catch (const std::logic_error&) {
        p = 0;
      }
      if (p >= 1) return {SamplerKind::kMultiplePositive, p};
    }
    throw ConfigError("invalid sampling strategy '" + token + "'");
  }

  bool operator==(const SamplingStrategy&) const = default;
};

/*! \brief Binary relevance cut shared by samplers and corpus statistics. */
inline bool label_is_positive(int relevance) { return relevance > 0; }

inline std::vector<std::size_t> positive_indices(const QueryGroup& g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.docs.size(); ++i)
    if (label_is_positive(g.docs[i].relevance)) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> negative_indices(const QueryGroup& g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.docs.size(); ++i)
    if (!label_is_positive(g.docs[i].relevance)) out.push_back(i);
  return out;
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct QuerySplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/*!
 * \brief Partition a dataset at query level into train/val/test.
 *
 * Counts are floor-based on the val and test fractions with the remainder
 * assigned to train. Membership is decided by a seeded shuffle of query
 * positions; each split keeps its queries in original corpus order.
 */
inline QuerySplit split_by_query(const Dataset& data, SplitRatios ratios,
                                 std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  const std::size_t n = data.queries.size();
  if (n < 3) throw InsufficientQueries("need at least 3 queries to split");

  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
  const std::size_t n_test = static_cast<std::size_t>(
      std::floor(ratios.test * static_cast<double>(n)));
  const std::size_t n_train = n - n_val - n_test;
  if (n_train == 0 || n_val == 0 || n_test == 0)
    throw InsufficientQueries("a split would be empty for " +
                              std::to_string(n) + " queries");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&](std::size_t begin, std::size_t count, const char* tag) {
    std::vector<std::size_t> idx(order.begin() + begin,
                                 order.begin() + begin + count);
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.name = data.name.empty() ? tag : data.name + "/" + tag;
    out.feature_dims = data.feature_dims;
    out.queries.reserve(count);
    for (std::size_t i : idx) out.queries.push_back(data.queries[i]);
    return out;
  };

  QuerySplit split;
  split.train = take(0, n_train, "train");
  split.val = take(n_train, n_val, "val");
  split.test = take(n_train + n_val, n_test, "test");
  return split;
}

/*! \brief Per-query min-max feature scaling to [0,1]; constant dimensions
 *  map to 0. Queries never interact. */
inline Dataset normalize_features(const Dataset& data) {
  Dataset out = data;
  for (auto& q : out.queries) {
    if (q.docs.empty()) continue;
    const std::size_t dims = q.docs.front().features.size();
    for (std::size_t f = 0; f < dims; ++f) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (const auto& d : q.docs) {
        lo = std::min(lo, d.features[f]);
        hi = std::max(hi, d.features[f]);
      }
      const double range = hi - lo;
      for (auto& d : q.docs) {
        d.features[f] = range > 0.0 ? (d.features[f] - lo) / range : 0.0;
      }
    }
  }
  return out;
}

/*!
 * \brief Sample exactly profile.positives positive and profile.negatives
 * negative document indices from the group, uniformly without replacement.
 * The result is sorted ascending. Throws InsufficientItems when the group
 * cannot satisfy the counts.
 */
inline std::vector<std::size_t> sample_pn(const QueryGroup& group,
                                          const SparsityProfile& profile,
                                          Rng& rng) {
  auto pos = positive_indices(group);
  auto neg = negative_indices(group);
  if (pos.size() < static_cast<std::size_t>(profile.positives) ||
      neg.size() < static_cast<std::size_t>(profile.negatives)) {
    throw InsufficientItems(
        "query '" + group.query_id + "': need " +
        std::to_string(profile.positives) + "+/" +
        std::to_string(profile.negatives) + "-, have " +
        std::to_string(pos.size()) + "+/" + std::to_string(neg.size()) + "-");
  }
  auto chosen_pos = rng.sample_without_replacement(
      std::move(pos), static_cast<std::size_t>(profile.positives));
  auto chosen_neg = rng.sample_without_replacement(
      std::move(neg), static_cast<std::size_t>(profile.negatives));
  std::vector<std::size_t> out;
  out.reserve(chosen_pos.size() + chosen_neg.size());
  out.insert(out.end(), chosen_pos.begin(), chosen_pos.end());
  out.insert(out.end(), chosen_neg.begin(), chosen_neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

/*! \brief One query-level task: the per-inner-step train subsets plus the
 *  held-out test subset used by the meta update. */
struct MetaEpisode {
  std::vector<std::vector<std::size_t>> step_train;  // length T
  std::vector<std::size_t> test;
};

namespace detail {

// sample_pn restricted to an explicit index pool.
inline std::vector<std::size_t> sample_pn_from_pool(
    const QueryGroup& group, const std::vector<std::size_t>& pool,
    int want_pos, int want_neg, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i : pool) {
    (label_is_positive(group.docs[i].relevance) ? pos : neg).push_back(i);
  }
  if (pos.size() < static_cast<std::size_t>(want_pos) ||
      neg.size() < static_cast<std::size_t>(want_neg)) {
    throw InsufficientItems("query '" + group.query_id +
                            "': test set cannot exclude the final train set");
  }
  auto chosen_pos = rng.sample_without_replacement(
      std::move(pos), static_cast<std::size_t>(want_pos));
  auto chosen_neg = rng.sample_without_replacement(
      std::move(neg), static_cast<std::size_t>(want_neg));
  std::vector<std::size_t> out;
  out.reserve(chosen_pos.size() + chosen_neg.size());
  out.insert(out.end(), chosen_pos.begin(), chosen_pos.end());
  out.insert(out.end(), chosen_neg.begin(), chosen_neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/*!
 * \brief Build one meta-training episode: T train subsets of size
 * K = profile.items() plus a test subset of size K that is disjoint from the
 * step-T train subset. Earlier steps may overlap the test set.
 *
 * kFixed draws one subset and reuses it for every step; kOnePositive and
 * kMultiplePositive redraw each step with 1 (resp. configured) positives and
 * K minus that many negatives.
 */
inline MetaEpisode make_meta_episode(const QueryGroup& group,
                                     const SparsityProfile& profile,
                                     const SamplingStrategy& strategy,
                                     int inner_steps, Rng& rng) {
  if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
  const int k = profile.items();

  MetaEpisode ep;
  ep.step_train.reserve(static_cast<std::size_t>(inner_steps));

  int step_pos = profile.positives;
  switch (strategy.kind) {
    case SamplerKind::kFixed: break;
    case SamplerKind::kOnePositive: step_pos = 1; break;
    case SamplerKind::kMultiplePositive:
      step_pos = strategy.positives_per_step;
      break;
  }
  if (step_pos >= k)
    throw ConfigError("per-step positive count must leave room for negatives");
  const SparsityProfile step_profile{step_pos, k - step_pos};

  if (strategy.kind == SamplerKind::kFixed) {
    auto subset = sample_pn(group, profile, rng);
    for (int t = 0; t < inner_steps; ++t) ep.step_train.push_back(subset);
  } else {
    for (int t = 0; t < inner_steps; ++t)
      ep.step_train.push_back(sample_pn(group, step_profile, rng));
  }

  // Test items are drawn from everything outside the final train subset.
  const auto& last = ep.step_train.back();
  std::vector<std::size_t> pool;
  pool.reserve(group.docs.size());
  for (std::size_t i = 0; i < group.docs.size(); ++i) {
    if (!std::binary_search(last.begin(), last.end(), i)) pool.push_back(i);
  }
  ep.test = detail::sample_pn_from_pool(group, pool, profile.positives,
                                        profile.negatives, rng);
  return ep;
}

/*! \brief Meta-test split of one query: a pXnY tuning subset and the rest as
 *  evaluation items. eval may be empty when the group has exactly K items;
 *  such queries are excluded from evaluation averages downstream. */
struct FinetuneSplit {
  std::vector<std::size_t> tuning;
  std::vector<std::size_t> eval;
};

inline FinetuneSplit make_finetune_split(const QueryGroup& group,
                                         const SparsityProfile& profile,
                                         Rng& rng) {
  FinetuneSplit out;
  out.tuning = sample_pn(group, profile, rng);
  out.eval.reserve(group.docs.size() - out.tuning.size());
  for (std::size_t i = 0; i < group.docs.size(); ++i) {
    if (!std::binary_search(out.tuning.begin(), out.tuning.end(), i))
      out.eval.push_back(i);
  }
  return out;
}

/*! \brief Synthetic minority vector plus the pool index of its base point. */
struct SmoteSample {
  std::vector<double> features;
  std::size_t base_index;
};

/*!
 * \brief SMOTE oversampling over a pool of positive feature vectors.
 *
 * Each synthetic point is x + u * (nn - x) for a uniformly chosen base x, one
 * of its k nearest positive neighbors nn (Euclidean), and u uniform in [0,1].
 * Returns exactly n_synthetic samples.
 */
inline std::vector<SmoteSample> smote_oversample(
    const std::vector<std::vector<double>>& positive_vectors, int k_neighbors,
    int n_synthetic, Rng& rng) {
  const std::size_t n = positive_vectors.size();
  if (n < 2)
    throw InsufficientPositives("SMOTE needs at least 2 positive vectors");
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
  if (n_synthetic < 0) throw ConfigError("n_synthetic must be >= 0");

  const std::size_t k = std::min<std::size_t>(k_neighbors, n - 1);

  // Neighbor lists. The pools we see are small (positives only), so the
  // quadratic scan is fine.
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      const auto& a = positive_vectors[i];
      const auto& b = positive_vectors[j];
      for (std::size_t f = 0; f < a.size(); ++f) {
        const double diff = a[f] - b[f];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, j);
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& x, const auto& y) {
                       return x.first < y.first;
                     });
    neighbors[i].reserve(k);
    for (std::size_t j = 0; j < k; ++j) neighbors[i].push_back(dist[j].second);
  }

  std::vector<SmoteSample> out;
  out.reserve(static_cast<std::size_t>(n_synthetic));
  for (int s = 0; s < n_synthetic; ++s) {
    const std::size_t base = static_cast<std::size_t>(rng.uniform_index(n));
    const auto& nn_list = neighbors[base];
    const std::size_t nn =
        nn_list[static_cast<std::size_t>(rng.uniform_index(nn_list.size()))];
    const double u = rng.uniform_double();
    SmoteSample sample;
    sample.base_index = base;
    const auto& x = positive_vectors[base];
    const auto& y = positive_vectors[nn];
    sample.features.resize(x.size());
    for (std::size_t f = 0; f < x.size(); ++f)
      sample.features[f] = x[f] + u * (y[f] - x[f]);
    out.push_back(std::move(sample));
  }
  return out;
}

/*!
 * \brief SMOTE augmentation of a whole training split.
 *
 * The positive pool is gathered across all queries (per-query pools are
 * usually too small under pXnY sparsity), synthetic items are appended to the
 * query of their base vector and labeled with the split's minimum positive
 * grade. n_synthetic = round(multiplier * pool size).
 */
inline Dataset smote_augment_dataset(const Dataset& train, int k_neighbors,
                                     double multiplier, Rng& rng) {
  std::vector<std::vector<double>> pool;
  std::vector<std::size_t> owner_query;  // pool slot -> query index
  int min_pos_grade = std::numeric_limits<int>::max();
  for (std::size_t qi = 0; qi < train.queries.size(); ++qi) {
    for (const auto& doc : train.queries[qi].docs) {
      if (label_is_positive(doc.relevance)) {
        pool.push_back(doc.features);
        owner_query.push_back(qi);
        min_pos_grade = std::min(min_pos_grade, doc.relevance);
      }
    }
  }
  if (pool.size() < 2)
    throw InsufficientPositives(
        "SMOTE augmentation needs at least 2 positives in the training split");

  const int n_synthetic = static_cast<int>(
      std::llround(multiplier * static_cast<double>(pool.size())));
  auto samples = smote_oversample(pool, k_neighbors, n_synthetic, rng);

  Dataset out = train;
  for (auto& s : samples) {
    Document doc;
    doc.features = std::move(s.features);
    doc.relevance = min_pos_grade;
    out.queries[owner_query[s.base_index]].docs.push_back(std::move(doc));
  }
  return out;
}

}  // namespace mltr

#endif  // MLTR_DATA_HPP_
