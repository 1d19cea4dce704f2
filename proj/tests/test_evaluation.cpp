/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mltr/evaluation.hpp"
#include "mltr/random.hpp"
#include "support/oracles.hpp"

using namespace mltr;

TEST_CASE("ndcg of an ideally ordered list is 1") {
  for (std::size_t k : {1u, 2u, 5u, 10u}) {
    CHECK(ndcg_at_k({3, 2, 2, 1, 0}, k) == 1.0);
    CHECK(ndcg_at_k({2}, k) == 1.0);
  }
}

TEST_CASE("ndcg with no relevant item is 0") {
  CHECK(ndcg_at_k({0, 0, 0}, 3) == 0.0);
  CHECK(ndcg_at_k({0}, 1) == 0.0);
}

TEST_CASE("ndcg worked example [2,3] at k = 2") {
  // DCG = 3/log2(2) + 7/log2(3); IDCG = 7/log2(2) + 3/log2(3)
  const double dcg = 3.0 + 7.0 / std::log2(3.0);
  const double idcg = 7.0 + 3.0 / std::log2(3.0);
  CHECK(dcg == Catch::Approx(7.41650).margin(5e-6));
  CHECK(idcg == Catch::Approx(8.89279).margin(5e-6));
  CHECK(ndcg_at_k({2, 3}, 2) == Catch::Approx(dcg / idcg).epsilon(1e-14));
  CHECK(ndcg_at_k({2, 3}, 2) == Catch::Approx(0.83399).margin(5e-6));
}

TEST_CASE("ndcg matches the exhaustive permutation oracle") {
  // all label multisets of size <= 5 with grades 0..4, all permutations,
  // all cutoffs (the acceptance suite extends this to size 6)
  std::vector<int> labels;
  std::function<void(int, int)> enumerate = [&](int remaining, int max_grade) {
    if (remaining == 0) {
      std::vector<int> perm = labels;
      std::sort(perm.begin(), perm.end());
      do {
        for (std::size_t k = 1; k <= perm.size(); ++k) {
          const double got = ndcg_at_k(perm, k);
          const double want = oracle::brute_ndcg(perm, k);
          if (std::fabs(got - want) > 1e-12) {
            CAPTURE(perm, k, got, want);
            REQUIRE(std::fabs(got - want) <= 1e-12);
          }
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      return;
    }
    for (int g = 0; g <= max_grade; ++g) {
      labels.push_back(g);
      enumerate(remaining - 1, g);  // multisets: non-increasing sequences
      labels.pop_back();
    }
  };
  for (int size = 1; size <= 5; ++size) enumerate(size, 4);
  SUCCEED("ndcg matches brute force on all multisets up to size 5");
}

TEST_CASE("promoting a higher grade never decreases ndcg") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> labels(2 + rng.uniform_index(6));
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(4));
    const std::size_t i = rng.uniform_index(labels.size() - 1);
    if (labels[i] >= labels[i + 1]) continue;
    std::vector<int> swapped = labels;
    std::swap(swapped[i], swapped[i + 1]);  // higher grade moves up
    for (std::size_t k = i + 1; k <= labels.size(); ++k)
      CHECK(ndcg_at_k(swapped, k) >= ndcg_at_k(labels, k) - 1e-15);
  }
}

TEST_CASE("ndcg stays within [0, 1]") {
  Rng rng(73);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> labels(1 + rng.uniform_index(8));
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(5));
    for (std::size_t k = 1; k <= labels.size() + 2; ++k) {
      const double v = ndcg_at_k(labels, k);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("rank_by_scores is a stable descending argsort") {
  CHECK(rank_by_scores({3.0, 2.0, 1.0}) ==
        std::vector<std::size_t>{0, 1, 2});
  CHECK(rank_by_scores({1.0, 1.0, 1.0}) ==
        std::vector<std::size_t>{0, 1, 2});
  CHECK(rank_by_scores({1.0, 2.0, 3.0}) ==
        std::vector<std::size_t>{2, 1, 0});
  CHECK(rank_by_scores({1.0, 2.0, 2.0, 0.5}) ==
        std::vector<std::size_t>{1, 2, 0, 3});
  CHECK_THROWS_AS(rank_by_scores({1.0, std::nan("")}), DataError);
}

namespace {

// Identity scorer: one feature which the 1-to-1 linear model passes through.
ParameterVector identity_model() {
  ParameterVector p;
  p.layer_dims = {1, 1};
  p.with_bias = false;
  p.values = {1.0};
  return p;
}

Dataset labels_as_features(
    const std::vector<std::vector<int>>& label_lists) {
  Dataset data;
  data.feature_dims = 1;
  for (std::size_t q = 0; q < label_lists.size(); ++q) {
    QueryGroup g;
    g.query_id = "q" + std::to_string(q);
    for (int l : label_lists[q])
      g.docs.push_back({{static_cast<double>(l)}, l});
    data.queries.push_back(std::move(g));
  }
  return data;
}

std::vector<std::vector<std::size_t>> full_eval_sets(const Dataset& d) {
  std::vector<std::vector<std::size_t>> sets(d.queries.size());
  for (std::size_t q = 0; q < d.queries.size(); ++q) {
    sets[q].resize(d.queries[q].docs.size());
    std::iota(sets[q].begin(), sets[q].end(), std::size_t{0});
  }
  return sets;
}

}  // namespace

TEST_CASE("a model scoring exactly the labels reaches ndcg 1") {
  const auto data = labels_as_features({{0, 2, 1}, {1, 0, 0, 2}});
  const auto metrics =
      evaluate_model(identity_model(), data, full_eval_sets(data), {1, 5, 10});
  for (double a : metrics.aggregate) CHECK(a == 1.0);
  CHECK(metrics.skipped == 0);
  CHECK(metrics.per_query.size() == 2);
}

TEST_CASE("single query aggregate equals that query's metric") {
  const auto data = labels_as_features({{1, 0, 2}});
  const auto metrics =
      evaluate_model(identity_model(), data, full_eval_sets(data), {10});
  REQUIRE(metrics.per_query.size() == 1);
  CHECK(metrics.aggregate[0] == metrics.per_query.begin()->second[0]);
}

TEST_CASE("constant-score model matches the placement enumeration oracle") {
  // one relevant item at each possible position among m items; constant
  // scores keep original order, so NDCG depends only on the position
  const std::size_t m = 6;
  for (std::size_t pos = 0; pos < m; ++pos) {
    std::vector<int> labels(m, 0);
    labels[pos] = 1;

    Dataset data;
    data.feature_dims = 1;
    QueryGroup g;
    g.query_id = "q";
    for (int l : labels) g.docs.push_back({{0.5}, l});  // same feature value
    data.queries.push_back(g);

    const auto metrics = evaluate_model(identity_model(), data,
                                        full_eval_sets(data), {10});
    // oracle: ranked order == original order under the tie rule
    const double expected = oracle::brute_dcg(labels, 10) /
                            oracle::brute_dcg({1, 0, 0, 0, 0, 0}, 10);
    CHECK(metrics.aggregate[0] == Catch::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("zero-idcg and empty-eval queries are skipped, not averaged") {
  const auto data = labels_as_features({{0, 0, 0}, {2, 1}, {1}});
  auto sets = full_eval_sets(data);
  sets[2].clear();  // empty eval set
  const auto metrics = evaluate_model(identity_model(), data, sets, {5});
  CHECK(metrics.skipped == 2);
  REQUIRE(metrics.per_query.size() == 1);
  CHECK(metrics.aggregate[0] == 1.0);
}

TEST_CASE("regularized incomplete beta matches closed forms") {
  Rng rng(93);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform_double();
    // I_x(1,1) = x
    CHECK(detail::regularized_incomplete_beta(1, 1, x) ==
          Catch::Approx(x).margin(1e-14));
    // I_x(2,2) = 3x^2 - 2x^3
    CHECK(detail::regularized_incomplete_beta(2, 2, x) ==
          Catch::Approx(3 * x * x - 2 * x * x * x).margin(1e-13));
    // I_x(a,1) = x^a
    const double a = 0.5 + 4.0 * rng.uniform_double();
    CHECK(detail::regularized_incomplete_beta(a, 1, x) ==
          Catch::Approx(std::pow(x, a)).margin(1e-13));
    // I_x(1,b) = 1 - (1-x)^b
    const double b = 0.5 + 4.0 * rng.uniform_double();
    CHECK(detail::regularized_incomplete_beta(1, b, x) ==
          Catch::Approx(1.0 - std::pow(1.0 - x, b)).margin(1e-13));
  }
  CHECK(detail::regularized_incomplete_beta(3, 2, 0.0) == 0.0);
  CHECK(detail::regularized_incomplete_beta(3, 2, 1.0) == 1.0);
}

TEST_CASE("paired t-test trivial cases") {
  const std::vector<double> a = {0.3, 0.5, 0.7};

  SECTION("identical samples hit the zero-variance path") {
    const auto res = paired_t_test(a, a);
    CHECK(res.zero_variance);
    CHECK(std::isnan(res.t_statistic));
    CHECK(res.p_value == 1.0);
    CHECK_FALSE(res.significant_at_0_01);
  }

  SECTION("antisymmetric differences give t = 0 and p = 1") {
    const auto res = paired_t_test({1.0, -1.0}, {0.0, 0.0});
    CHECK_FALSE(res.zero_variance);
    CHECK(res.t_statistic == 0.0);
    CHECK(res.p_value == Catch::Approx(1.0).margin(1e-12));
    CHECK(res.degrees_of_freedom == 1);
  }

  SECTION("constant nonzero difference is flagged") {
    const auto res = paired_t_test({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
    CHECK(res.zero_variance);
    CHECK(res.p_value == 0.0);
    CHECK(res.significant_at_0_01);
  }
}

TEST_CASE("paired t-test matches the textbook computation") {
  // the worked example from the module contract
  {
    const std::vector<double> diffs = {0.1, 0.2, 0.15, 0.05, 0.3};
    const std::vector<double> zeros(diffs.size(), 0.0);
    const auto res = paired_t_test(diffs, zeros);
    const auto want = oracle::textbook_paired_t(diffs);
    CHECK(res.t_statistic == Catch::Approx(want.t).margin(1e-12));
    CHECK(res.p_value == Catch::Approx(want.p).margin(1e-9));
    CHECK(res.degrees_of_freedom == 4);
  }

  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(30);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform_double();
      b[i] = rng.uniform_double();
    }
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = a[i] - b[i];
    const auto res = paired_t_test(a, b);
    const auto want = oracle::textbook_paired_t(diffs);
    CHECK(res.t_statistic == Catch::Approx(want.t).margin(1e-9));
    CHECK(res.p_value == Catch::Approx(want.p).margin(1e-9));
  }
}

TEST_CASE("paired t-test is antisymmetric in its arguments") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(20);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform_double();
      b[i] = rng.uniform_double();
    }
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    CHECK(ab.t_statistic == -ba.t_statistic);  // exact
    CHECK(ab.p_value == ba.p_value);
  }
}

TEST_CASE("paired t-test validates input") {
  CHECK_THROWS_AS(paired_t_test({1.0}, {1.0, 2.0}), DimensionMismatch);
  CHECK_THROWS_AS(paired_t_test({1.0}, {1.0}), ConfigError);
}
