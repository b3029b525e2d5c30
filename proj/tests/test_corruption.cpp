// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bigan/corruption.hpp"
#include "bigan/rng.hpp"
#include "support.hpp"

using namespace bigan;

namespace {

SeriesSample sample_with_target_mask(const std::vector<double>& target_mask, std::size_t d = 2) {
  const std::size_t n = target_mask.size();
  Array values = Array::matrix(n, d), observed = Array::matrix(n, d, 1.0);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = static_cast<double>(i);
    for (std::size_t j = 0; j < d; ++j) values(i, j) = 1.0 + static_cast<double>(i) + 0.1 * static_cast<double>(j);
    observed(i, 0) = target_mask[i];
  }
  return make_sample("x", values, observed, TimeGrid(times), 0);
}

SeriesSample random_sample(Rng& rng, std::size_t n, std::size_t d) {
  Array values = Array::matrix(n, d), observed = Array::matrix(n, d);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = static_cast<double>(i);
    for (std::size_t j = 0; j < d; ++j) {
      values(i, j) = rng.normal();
      observed(i, j) = rng.uniform() < 0.7 ? 1.0 : 0.0;
    }
  }
  observed(0, 0) = 1.0;
  observed(n - 1, 0) = 1.0;
  return make_sample("r", values, observed, TimeGrid(times), 0);
}

void check_plan_invariants(const SeriesSample& original, const CorruptionPlan& plan) {
  const SeriesSample& c = plan.corrupted;
  const std::size_t t = original.target;
  for (std::size_t i = 0; i < original.steps(); ++i) {
    const double e = plan.eval_mask[i];
    CHECK(e * c.mask(i, t) == 0.0);
    CHECK(std::max(e, c.mask(i, t)) == original.mask(i, t));
    if (e == 1.0) {
      CHECK(c.values(i, t) == 0.0);
      CHECK(plan.truth[i] == original.values(i, t));
      CHECK(i < original.native_length);
    }
    for (std::size_t j = 0; j < original.features(); ++j) {
      if (j == t) continue;
      CHECK(c.mask(i, j) == original.mask(i, j));
      CHECK(c.values(i, j) == original.values(i, j));
    }
  }
  const auto [fwd, bwd] = compute_deltas(c.mask, c.grid);
  CHECK(c.delta_fwd == fwd);
  CHECK(c.delta_bwd == bwd);
  // forward deltas can only change after the first deleted step
  std::size_t first = original.steps();
  for (std::size_t i = 0; i < original.steps(); ++i) {
    if (plan.eval_mask[i] == 1.0) {
      first = i;
      break;
    }
  }
  for (std::size_t i = 0; i <= std::min(first, original.steps() - 1); ++i) {
    CHECK(c.delta_fwd(i, t) == original.delta_fwd(i, t));
  }
  for (std::size_t i = 0; i < original.steps(); ++i) {
    CHECK(c.delta_fwd(i, t) == testing::brute_force_delta(c.mask, c.grid.times(), i, t));
  }
}

}  // namespace

TEST_CASE("imputation deletes round-half-up of the observed count") {
  const SeriesSample s = sample_with_target_mask(std::vector<double>(10, 1.0));
  const CorruptionPlan one = corrupt_imputation(s, 0.1, 1);
  CHECK(one.eval_count() == 1);
  check_plan_invariants(s, one);
  CHECK(corrupt_imputation(s, 0.25, 1).eval_count() == 3);  // 2.5 rounds up
  CHECK(corrupt_imputation(s, 0.5, 1).eval_count() == 5);

  const CorruptionPlan none = corrupt_imputation(s, 0.04, 1);
  CHECK(none.eval_count() == 0);
  CHECK(none.corrupted.mask == s.mask);
  CHECK(none.corrupted.values == s.values);

  CHECK_THROWS_AS(corrupt_imputation(s, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(corrupt_imputation(s, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(corrupt_imputation(s, 0.97, 1), std::invalid_argument);
  CHECK_THROWS_AS(corrupt_imputation(sample_with_target_mask(std::vector<double>(5, 0.0)), 0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("imputation only deletes observed target cells and is seeded") {
  const SeriesSample s = sample_with_target_mask({1, 0, 1, 1, 0, 1, 1, 1, 0, 1});
  const CorruptionPlan a = corrupt_imputation(s, 0.3, 99);
  const CorruptionPlan b = corrupt_imputation(s, 0.3, 99);
  CHECK(a.eval_mask == b.eval_mask);
  CHECK(a.eval_count() == 2);  // 0.3 * 7 = 2.1
  for (std::size_t i = 0; i < s.steps(); ++i) {
    if (a.eval_mask[i] == 1.0) CHECK(s.mask(i, 0) == 1.0);
  }
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    differs = corrupt_imputation(s, 0.3, seed).eval_mask != a.eval_mask;
  }
  CHECK(differs);
}

TEST_CASE("deletions are uniform over the observed cells") {
  const SeriesSample s = sample_with_target_mask(std::vector<double>(10, 1.0));
  std::vector<int> hits(10, 0);
  const int trials = 5000;
  for (int k = 0; k < trials; ++k) {
    const CorruptionPlan p = corrupt_imputation(s, 0.2, static_cast<std::uint64_t>(k));
    for (std::size_t i = 0; i < 10; ++i) hits[i] += p.eval_mask[i] == 1.0;
  }
  // each cell is deleted with probability 0.2; 4 sigma band
  const double expected = 0.2 * trials, sigma = std::sqrt(trials * 0.2 * 0.8);
  for (int h : hits) CHECK(std::fabs(h - expected) < 4.0 * sigma);
}

TEST_CASE("prediction deletes the observed window") {
  std::vector<double> full(20, 1.0);
  const SeriesSample s = sample_with_target_mask(full);
  const CorruptionPlan p = corrupt_prediction(s, 4);
  for (std::size_t i = 0; i < 20; ++i) CHECK(p.eval_mask[i] == (i >= 4 ? 1.0 : 0.0));
  check_plan_invariants(s, p);

  const SeriesSample gap = sample_with_target_mask({1, 1, 0, 1, 1});
  const CorruptionPlan q = corrupt_prediction(gap, 2);
  CHECK(q.eval_mask == std::vector<double>{0, 0, 0, 1, 1});
  check_plan_invariants(gap, q);

  full.back() = 0.0;
  const CorruptionPlan empty = corrupt_prediction(sample_with_target_mask(full), 19);
  CHECK(empty.eval_count() == 0);
  CHECK(empty.empty_window);

  CHECK_THROWS_AS(corrupt_prediction(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(corrupt_prediction(s, 20), std::invalid_argument);
}

TEST_CASE("padded rows never enter the evaluation mask") {
  Rng rng(4);
  const SeriesSample raw = random_sample(rng, 12, 3);
  const Dataset padded = pad_and_align({raw}, 20);
  const SeriesSample& s = padded.samples[0];
  const CorruptionPlan p = corrupt_prediction(s, 4);
  for (std::size_t i = 12; i < 20; ++i) CHECK(p.eval_mask[i] == 0.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const CorruptionPlan q = corrupt_imputation(s, 0.5, seed);
    for (std::size_t i = 12; i < 20; ++i) CHECK(q.eval_mask[i] == 0.0);
  }
}

TEST_CASE("plan invariants hold on random samples") {
  Rng rng(21);
  for (int c = 0; c < 200; ++c) {
    const SeriesSample s = random_sample(rng, 4 + rng.below(20), 1 + rng.below(4));
    const double rate = rng.uniform(0.05, 0.5);
    check_plan_invariants(s, corrupt_imputation(s, rate, rng.next()));
    check_plan_invariants(s, corrupt_prediction(s, 1 + rng.below(s.steps() - 1)));
  }
}

TEST_CASE("plans serialize and replay") {
  Rng rng(8);
  std::vector<CorruptionPlan> plans;
  std::vector<SeriesSample> samples;
  for (int k = 0; k < 5; ++k) {
    samples.push_back(random_sample(rng, 10, 2));
    samples.back().id = "s" + std::to_string(k);
    plans.push_back(k % 2 ? corrupt_prediction(samples.back(), 3)
                          : corrupt_imputation(samples.back(), 0.3, 1000 + static_cast<std::uint64_t>(k)));
  }
  std::stringstream buf;
  write_plans(buf, plans);
  const auto records = read_plans(buf);
  REQUIRE(records.size() == plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    CHECK(records[k].sample_id == samples[k].id);
    CHECK(records[k].seed == plans[k].seed);
    CHECK(records[k].setting.label() == plans[k].setting.label());
    const CorruptionPlan replay = corrupt_steps(samples[k], records[k].setting, records[k].seed, records[k].steps);
    CHECK(replay.eval_mask == plans[k].eval_mask);
    CHECK(replay.corrupted.mask == plans[k].corrupted.mask);
  }
  CHECK(Setting::imputation(0.1).label() == "imputation-0.1");
  CHECK(Setting::prediction(4).label() == "prediction-4");
}
