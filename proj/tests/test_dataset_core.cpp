/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mltr/data.hpp"

using namespace mltr;

namespace {

Dataset dummy_queries(std::size_t n, std::size_t docs = 1) {
  Dataset data;
  data.feature_dims = 2;
  for (std::size_t i = 0; i < n; ++i) {
    QueryGroup g;
    g.query_id = "q" + std::to_string(i);
    for (std::size_t d = 0; d < docs; ++d)
      g.docs.push_back({{0.0, 0.0}, 0});
    data.queries.push_back(std::move(g));
  }
  return data;
}

QueryGroup group_with(std::size_t positives, std::size_t negatives) {
  QueryGroup g;
  g.query_id = "g";
  for (std::size_t i = 0; i < positives; ++i)
    g.docs.push_back({{static_cast<double>(i)}, 1});
  for (std::size_t i = 0; i < negatives; ++i)
    g.docs.push_back({{static_cast<double>(100 + i)}, 0});
  return g;
}

std::set<std::string> qid_set(const Dataset& d) {
  std::set<std::string> out;
  for (const auto& q : d.queries) out.insert(q.query_id);
  return out;
}

}  // namespace

TEST_CASE("sparsity profiles serialize as pXnY") {
  CHECK(SparsityProfile{1, 9}.to_string() == "p1n9");
  CHECK(SparsityProfile::parse("p2n18") == SparsityProfile{2, 18});
  CHECK(SparsityProfile::parse("p1n39").items() == 40);
  CHECK_THROWS_AS(SparsityProfile::parse("p0n9"), ConfigError);
  CHECK_THROWS_AS(SparsityProfile::parse("1n9"), ConfigError);
  CHECK_THROWS_AS(SparsityProfile::parse("p1"), ConfigError);
  CHECK_THROWS_AS(SparsityProfile::parse("p1n"), ConfigError);
  CHECK_THROWS_AS(SparsityProfile::parse("pXnY"), ConfigError);
}

TEST_CASE("sampling strategies parse") {
  CHECK(SamplingStrategy::parse("fixed").kind == SamplerKind::kFixed);
  CHECK(SamplingStrategy::parse("one_positive").kind ==
        SamplerKind::kOnePositive);
  const auto mp = SamplingStrategy::parse("multiple_positive:2");
  CHECK(mp.kind == SamplerKind::kMultiplePositive);
  CHECK(mp.positives_per_step == 2);
  CHECK_THROWS_AS(SamplingStrategy::parse("multiple_positive:0"), ConfigError);
  CHECK_THROWS_AS(SamplingStrategy::parse("whatever"), ConfigError);
}

TEST_CASE("split_by_query matches floor arithmetic") {
  const auto data = dummy_queries(10);
  const auto split = split_by_query(data, {0.8, 0.1, 0.1}, 1);
  CHECK(split.train.queries.size() == 8);
  CHECK(split.val.queries.size() == 1);
  CHECK(split.test.queries.size() == 1);

  // 784 queries: floor(78.4) = 78 for val and test, remainder to train.
  const auto big = dummy_queries(784);
  const auto bsplit = split_by_query(big, {0.8, 0.1, 0.1}, 99);
  CHECK(bsplit.train.queries.size() == 628);
  CHECK(bsplit.val.queries.size() == 78);
  CHECK(bsplit.test.queries.size() == 78);
}

TEST_CASE("split_by_query is a seeded partition") {
  const auto data = dummy_queries(23);
  const auto a = split_by_query(data, {0.8, 0.1, 0.1}, 5);
  const auto b = split_by_query(data, {0.8, 0.1, 0.1}, 5);
  CHECK(qid_set(a.train) == qid_set(b.train));
  CHECK(qid_set(a.val) == qid_set(b.val));
  CHECK(qid_set(a.test) == qid_set(b.test));

  // pairwise disjoint and covering
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& q : part->queries) CHECK(all.insert(q.query_id).second);
  CHECK(all.size() == 23);

  const auto c = split_by_query(data, {0.8, 0.1, 0.1}, 6);
  CHECK(qid_set(a.train) != qid_set(c.train));  // different seed, new shuffle
}

TEST_CASE("split_by_query validates inputs") {
  const auto data = dummy_queries(5);
  CHECK_THROWS_AS(split_by_query(data, {0.8, 0.3, 0.1}, 0), ConfigError);
  CHECK_THROWS_AS(split_by_query(dummy_queries(2), {0.8, 0.1, 0.1}, 0),
                  InsufficientQueries);
  // 5 queries at 10% floor to zero-sized val/test
  CHECK_THROWS_AS(split_by_query(data, {0.8, 0.1, 0.1}, 0),
                  InsufficientQueries);
}

TEST_CASE("normalize_features rescales per query and per dimension") {
  Dataset data;
  data.feature_dims = 2;
  QueryGroup a;
  a.query_id = "a";
  a.docs.push_back({{1.0, 2.0}, 0});
  a.docs.push_back({{3.0, 2.0}, 0});
  a.docs.push_back({{5.0, 2.0}, 1});
  QueryGroup b;
  b.query_id = "b";
  b.docs.push_back({{100.0, 0.0}, 0});
  b.docs.push_back({{200.0, 1.0}, 1});
  data.queries = {a, b};

  const auto norm = normalize_features(data);
  CHECK(norm.queries[0].docs[0].features[0] == 0.0);
  CHECK(norm.queries[0].docs[1].features[0] == 0.5);
  CHECK(norm.queries[0].docs[2].features[0] == 1.0);
  // constant column maps to zero
  for (const auto& d : norm.queries[0].docs) CHECK(d.features[1] == 0.0);
  // queries do not interact: b renormalizes over its own range
  CHECK(norm.queries[1].docs[0].features[0] == 0.0);
  CHECK(norm.queries[1].docs[1].features[0] == 1.0);
  // original untouched
  CHECK(data.queries[0].docs[2].features[0] == 5.0);
}

TEST_CASE("label_is_positive is the grade > 0 cut") {
  CHECK_FALSE(label_is_positive(0));
  CHECK(label_is_positive(1));
  CHECK(label_is_positive(2));
}

TEST_CASE("sample_pn draws exact counts without replacement") {
  const auto g = group_with(3, 50);
  Rng rng(11);
  const SparsityProfile p1n9{1, 9};
  const auto idx = sample_pn(g, p1n9, rng);
  REQUIRE(idx.size() == 10);
  std::set<std::size_t> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == 10);
  int pos = 0;
  for (auto i : idx) pos += label_is_positive(g.docs[i].relevance) ? 1 : 0;
  CHECK(pos == 1);
}

TEST_CASE("sample_pn rejects infeasible groups") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_pn(group_with(0, 50), {1, 9}, rng),
                  InsufficientItems);
  CHECK_THROWS_AS(sample_pn(group_with(3, 5), {1, 9}, rng),
                  InsufficientItems);
}

TEST_CASE("sample_pn positive choice is uniform") {
  // binomial oracle: each of 3 positives should appear with frequency
  // 1/3 within 3 sigma over N draws
  const auto g = group_with(3, 30);
  const int n_draws = 30000;
  std::vector<int> counts(3, 0);
  Rng rng(123);
  for (int i = 0; i < n_draws; ++i) {
    const auto idx = sample_pn(g, {1, 9}, rng);
    for (auto j : idx)
      if (label_is_positive(g.docs[j].relevance)) ++counts[j];
  }
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(p * (1 - p) * n_draws);
  for (int c : counts) {
    CHECK(std::fabs(c - p * n_draws) <= 3.0 * sigma);
  }
}

TEST_CASE("make_meta_episode with the fixed sampler reuses one subset") {
  const auto g = group_with(2, 20);
  Rng rng(5);
  const auto ep = make_meta_episode(g, {1, 9}, {SamplerKind::kFixed, 1}, 3,
                                    rng);
  REQUIRE(ep.step_train.size() == 3);
  CHECK(ep.step_train[0] == ep.step_train[1]);
  CHECK(ep.step_train[1] == ep.step_train[2]);
  CHECK(ep.test.size() == 10);
  // final-step exclusion
  for (auto i : ep.test)
    CHECK_FALSE(std::binary_search(ep.step_train.back().begin(),
                                   ep.step_train.back().end(), i));
}

TEST_CASE("one-positive sampler resamples each step with exactly 1 positive") {
  const auto g = group_with(5, 40);
  Rng rng(9);
  const auto ep = make_meta_episode(g, {1, 19}, {SamplerKind::kOnePositive, 1},
                                    3, rng);
  REQUIRE(ep.step_train.size() == 3);
  bool all_same = true;
  for (const auto& step : ep.step_train) {
    REQUIRE(step.size() == 20);
    int pos = 0;
    for (auto i : step) pos += label_is_positive(g.docs[i].relevance) ? 1 : 0;
    CHECK(pos == 1);
    all_same = all_same && (step == ep.step_train.front());
  }
  CHECK_FALSE(all_same);  // 3 independent draws from 45 docs should differ
}

TEST_CASE("multiple-positive sampler uses the configured count") {
  const auto g = group_with(4, 40);
  Rng rng(13);
  const auto ep = make_meta_episode(
      g, {2, 18}, {SamplerKind::kMultiplePositive, 2}, 2, rng);
  REQUIRE(ep.step_train.size() == 2);
  for (const auto& step : ep.step_train) {
    REQUIRE(step.size() == 20);
    int pos = 0;
    for (auto i : step) pos += label_is_positive(g.docs[i].relevance) ? 1 : 0;
    CHECK(pos == 2);
  }
  int test_pos = 0;
  for (auto i : ep.test)
    test_pos += label_is_positive(g.docs[i].relevance) ? 1 : 0;
  CHECK(test_pos == 2);
}

TEST_CASE("episode test sampling fails when exclusion starves the pool") {
  // exactly p+n docs: nothing remains after excluding the final train set
  const auto g = group_with(1, 9);
  Rng rng(3);
  CHECK_THROWS_AS(
      make_meta_episode(g, {1, 9}, {SamplerKind::kFixed, 1}, 1, rng),
      InsufficientItems);
}

TEST_CASE("earlier-step overlap with the test set is permitted") {
  // 2 positives / 20 negatives, resampling per step: only the last step is
  // excluded from the test pool, so across many draws some earlier step must
  // intersect the test set.
  const auto g = group_with(2, 20);
  bool saw_overlap = false;
  for (int trial = 0; trial < 200 && !saw_overlap; ++trial) {
    Rng rng(1000 + trial);
    const auto ep = make_meta_episode(g, {1, 9},
                                      {SamplerKind::kOnePositive, 1}, 3, rng);
    for (std::size_t t = 0; t + 1 < ep.step_train.size(); ++t)
      for (auto i : ep.step_train[t])
        if (std::binary_search(ep.test.begin(), ep.test.end(), i))
          saw_overlap = true;
  }
  CHECK(saw_overlap);
}

TEST_CASE("make_finetune_split covers the group disjointly") {
  const auto g = group_with(5, 25);  // 30 docs
  Rng rng(21);
  const auto split = make_finetune_split(g, {1, 9}, rng);
  CHECK(split.tuning.size() == 10);
  CHECK(split.eval.size() == 20);
  std::set<std::size_t> all(split.tuning.begin(), split.tuning.end());
  for (auto i : split.eval) CHECK(all.insert(i).second);
  CHECK(all.size() == 30);
}

TEST_CASE("finetune split on a minimal group leaves eval empty") {
  const auto g = group_with(1, 9);
  Rng rng(2);
  const auto split = make_finetune_split(g, {1, 9}, rng);
  CHECK(split.tuning.size() == 10);
  CHECK(split.eval.empty());
}

TEST_CASE("smote synthetics lie on the segment between their parents") {
  Rng data_rng(31);
  std::vector<std::vector<double>> pool;
  for (int i = 0; i < 12; ++i) {
    std::vector<double> v(4);
    for (auto& x : v) x = data_rng.uniform_double() * 10.0 - 5.0;
    pool.push_back(std::move(v));
  }
  Rng rng(32);
  const int n = 1000;
  const auto samples = smote_oversample(pool, 3, n, rng);
  REQUIRE(samples.size() == static_cast<std::size_t>(n));

  for (const auto& s : samples) {
    const auto& x = pool[s.base_index];
    // oracle: some positive z must explain s as x + u (z - x) with one
    // consistent u in [0,1] across all dimensions
    bool explained = false;
    for (std::size_t zi = 0; zi < pool.size() && !explained; ++zi) {
      if (zi == s.base_index) continue;
      const auto& z = pool[zi];
      double u = -1.0;
      bool consistent = true;
      for (std::size_t f = 0; f < x.size(); ++f) {
        const double denom = z[f] - x[f];
        const double num = s.features[f] - x[f];
        if (std::fabs(denom) < 1e-12) {
          if (std::fabs(num) > 1e-9) consistent = false;
          continue;
        }
        const double uf = num / denom;
        if (u < 0.0) u = uf;
        else if (std::fabs(uf - u) > 1e-9) consistent = false;
      }
      if (consistent && u >= -1e-9 && u <= 1.0 + 1e-9) explained = true;
    }
    CHECK(explained);
  }
}

TEST_CASE("smote validates inputs") {
  Rng rng(1);
  std::vector<std::vector<double>> one = {{1.0, 2.0}};
  CHECK_THROWS_AS(smote_oversample(one, 1, 5, rng), InsufficientPositives);
  std::vector<std::vector<double>> two = {{0.0, 0.0}, {1.0, 1.0}};
  CHECK(smote_oversample(two, 5, 7, rng).size() == 7);  // k clamped to pool
  CHECK(smote_oversample(two, 1, 0, rng).empty());
}

TEST_CASE("smote interpolation endpoints") {
  // With both parents known, every sample must satisfy s = x + u (y - x);
  // verify the formula with the recovered u on each axis.
  std::vector<std::vector<double>> pool = {{0.0, 0.0}, {1.0, 1.0}};
  Rng rng(77);
  const auto samples = smote_oversample(pool, 1, 200, rng);
  for (const auto& s : samples) {
    CHECK(s.features[0] == Catch::Approx(s.features[1]).margin(1e-12));
    CHECK(s.features[0] >= -1e-12);
    CHECK(s.features[0] <= 1.0 + 1e-12);
  }
}

TEST_CASE("smote_augment_dataset attaches synthetics to the base query") {
  Dataset data;
  data.feature_dims = 2;
  QueryGroup a;
  a.query_id = "a";
  a.docs.push_back({{0.0, 0.0}, 2});
  a.docs.push_back({{0.5, 0.5}, 0});
  QueryGroup b;
  b.query_id = "b";
  b.docs.push_back({{1.0, 1.0}, 1});
  b.docs.push_back({{0.2, 0.8}, 0});
  data.queries = {a, b};

  Rng rng(5);
  const auto augmented = smote_augment_dataset(data, 1, 2.0, rng);
  // 2 positives, multiplier 2 -> 4 synthetics, all labeled with the minimum
  // positive grade (1)
  const std::size_t added = augmented.total_documents() -
                            data.total_documents();
  CHECK(added == 4);
  int synth_label_ok = 0;
  for (std::size_t qi = 0; qi < augmented.queries.size(); ++qi) {
    const auto& orig = data.queries[qi];
    const auto& aug = augmented.queries[qi];
    for (std::size_t d = orig.docs.size(); d < aug.docs.size(); ++d)
      synth_label_ok += (aug.docs[d].relevance == 1) ? 1 : 0;
  }
  CHECK(synth_label_ok == 4);
}
