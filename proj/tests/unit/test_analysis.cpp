#include <gtest/gtest.h>

#include <cmath>

#include "decoylab/agents.hpp"
#include "decoylab/analysis.hpp"
#include "decoylab/errors.hpp"

using namespace decoylab;

namespace {

ChoiceDistribution exact(double t, double c, double d = 0.0, bool three = true) {
  ChoiceDistribution out;
  out.probability = {t, c, d};
  out.supported = {true, true, three};
  return out;
}

ChoiceDistribution sampled(std::size_t t, std::size_t c, std::size_t d = 0) {
  ChoiceDistribution out;
  const double n = static_cast<double>(t + c + d);
  out.probability = {t / n, c / n, d / n};
  out.counts = {t, c, d};
  out.supported = {true, true, true};
  out.sample_count = t + c + d;
  return out;
}

ConditionKey key(Condition c, std::string variant = "baseline") { return {"Nurse", "b", std::move(variant), c}; }

}  // namespace

TEST(Aggregate, MeanAndSemOfExactDistributions) {
  std::vector<PermutationResult> r;
  const double pt[6] = {0.5, 0.6, 0.7, 0.4, 0.55, 0.65};
  for (int i = 5; i >= 0; --i) r.push_back({i, exact(pt[i], 1 - pt[i])});
  const auto agg = aggregate_permutations(key(Condition::Treatment), r);
  EXPECT_EQ(agg.mode, AggregationMode::MeanOfDistributions);
  EXPECT_NEAR(agg.p_target(), 0.5666666666666667, 1e-15);
  // sd = 0.10801234497346433, n = 6
  EXPECT_NEAR(agg.sem_target, 0.10801234497346433 / std::sqrt(6.0), 1e-15);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(agg.per_permutation[static_cast<std::size_t>(i)].permutation_id, i);
  EXPECT_FALSE(agg.total_samples.has_value());
}

TEST(Aggregate, PooledCounts) {
  const auto agg = aggregate_permutations(key(Condition::Control), {{0, sampled(200, 100)}, {1, sampled(100, 200)}});
  EXPECT_EQ(agg.mode, AggregationMode::PooledCounts);
  EXPECT_EQ(*agg.total_samples, 600u);
  EXPECT_DOUBLE_EQ(agg.p_target(), 0.5);
  EXPECT_EQ(agg.mean.count(Role::Target), 300u);
  // Unequal sample sizes weight by count, not by ordering.
  const auto uneven = aggregate_permutations(key(Condition::Control), {{0, sampled(90, 10)}, {1, sampled(100, 200)}});
  EXPECT_DOUBLE_EQ(uneven.p_target(), 190.0 / 400.0);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.5)}}), IncompleteDataError);
  EXPECT_THROW(aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.5)}, {0, exact(0.5, 0.5)}}),
               UsageError);
  EXPECT_THROW(aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.5)}, {2, exact(0.5, 0.5)}}),
               UsageError);
  EXPECT_THROW(aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.6)}, {1, exact(0.5, 0.5)}}),
               UsageError);
  EXPECT_THROW(aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.5)}, {1, sampled(1, 1)}}),
               UsageError);
}

TEST(Aggregate, PositionBiasedAgentAveragesToAThird) {
  const AgentSpec spec{PositionBiased{}};
  const auto set = baseline_choice_set(find_job("Nurse"), Condition::Treatment);
  std::vector<PermutationResult> r;
  for (const auto& p : enumerate_permutations(Condition::Treatment)) r.push_back({p.id(), agent_choose(spec, set, p)});
  const auto agg = aggregate_permutations(key(Condition::Treatment), r);
  for (Role role : {Role::Target, Role::Competitor, Role::Decoy}) EXPECT_NEAR(agg.mean[role], 1.0 / 3.0, 1e-15);
  EXPECT_GT(agg.sem_target, 0.1);
}

TEST(Bias, DifferenceAndCounts) {
  const auto control = aggregate_permutations(key(Condition::Control), {{0, sampled(150, 150)}, {1, sampled(150, 150)}});
  const auto treatment = aggregate_permutations(
      key(Condition::Treatment),
      {{0, sampled(70, 25, 5)}, {1, sampled(70, 25, 5)}, {2, sampled(70, 25, 5)}, {3, sampled(70, 25, 5)},
       {4, sampled(70, 25, 5)}, {5, sampled(70, 25, 5)}});
  const auto b = compute_bias(control, treatment);
  EXPECT_NEAR(b.bias, 0.2, 1e-15);
  ASSERT_TRUE(b.control_counts && b.treatment_counts);
  EXPECT_EQ(b.control_counts->target, 300);
  EXPECT_EQ(b.treatment_counts->target, 420);
  EXPECT_EQ(b.treatment_counts->other, 180);
  EXPECT_NEAR(chi_square_target(*b.control_counts, *b.treatment_counts).statistic, 50.0, 1e-9);
}

TEST(Bias, RequiresMatchingKeys) {
  const auto c = aggregate_permutations(key(Condition::Control), {{0, exact(0.5, 0.5, 0, false)}, {1, exact(0.5, 0.5, 0, false)}});
  std::vector<PermutationResult> six;
  for (int i = 0; i < 6; ++i) six.push_back({i, exact(0.6, 0.3, 0.1)});
  const auto t = aggregate_permutations(key(Condition::Treatment, "other"), six);
  EXPECT_THROW(compute_bias(c, t), UsageError);
  EXPECT_THROW(compute_bias(t, c), UsageError);
  const auto t2 = aggregate_permutations(key(Condition::Treatment), six);
  const auto b = compute_bias(c, t2);
  EXPECT_NEAR(b.bias, 0.1, 1e-15);
  EXPECT_FALSE(b.control_counts.has_value());
}

TEST(NominalCounts, ScaleTheTargetShare) {
  const auto n = nominal_counts(exact(0.7311, 0.2689), 600);
  EXPECT_NEAR(n.target, 438.66, 1e-9);
  EXPECT_NEAR(n.other, 161.34, 1e-9);
}

TEST(BiasMap, AssemblyAndRegionMeans) {
  const Job& dev = find_job("Full-stack developer");
  const auto pos = baseline_positions(dev);
  const auto grid = decoy_grid(dev, {Role::Target, pos.target}, {Role::Competitor, pos.competitor});
  std::vector<std::pair<Point, BiasResult>> results;
  for (const auto& g : grid) {
    BiasResult b;
    b.bias = g.point.q1 * 0.01;
    results.push_back({g.point, b});
  }
  std::reverse(results.begin(), results.end());
  const auto map = build_bias_map(dev, "b", PhantomRule::Dominance, results);
  ASSERT_EQ(map.cells.size(), 62u);
  EXPECT_EQ(map.cells.front().grid.point, grid.front().point);
  EXPECT_DOUBLE_EQ(map.at({8, 2}).bias.bias, 0.08);
  EXPECT_THROW(map.at({3, 6}), UsageError);
  const auto summaries = map.region_summaries();
  EXPECT_EQ(summaries.size(), 7u);
  std::size_t cells = 0;
  for (const auto& s : summaries) cells += s.cells;
  EXPECT_EQ(cells, 62u);
  EXPECT_EQ(summaries.front().region, DecoyRegion::AsdByTarget);
  EXPECT_EQ(summaries.back().region, DecoyRegion::NonDominated);
}

TEST(BiasMap, MissingDuplicateAndStrayCells) {
  const Job& nurse = find_job("Nurse");
  const auto pos = baseline_positions(nurse);
  const auto grid = decoy_grid(nurse, {Role::Target, pos.target}, {Role::Competitor, pos.competitor});
  std::vector<std::pair<Point, BiasResult>> results;
  for (const auto& g : grid) results.push_back({g.point, {}});

  auto missing = results;
  missing.pop_back();
  EXPECT_THROW(build_bias_map(nurse, "b", PhantomRule::Dominance, missing), IncompleteDataError);
  auto duplicate = results;
  duplicate.push_back(results.front());
  EXPECT_THROW(build_bias_map(nurse, "b", PhantomRule::Dominance, duplicate), UsageError);
  auto stray = results;
  stray.push_back({{3, 6}, {}});
  EXPECT_THROW(build_bias_map(nurse, "b", PhantomRule::Dominance, stray), UsageError);
}
