#pragma once

// Permutation aggregation, bias computation and decoy-space bias maps.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "decoylab/decode.hpp"
#include "decoylab/design.hpp"
#include "decoylab/stats.hpp"

namespace decoylab {

enum class AggregationMode {
  MeanOfDistributions,  // exact (log-probability) backends
  PooledCounts,         // sampled backends
};

std::string_view to_string(AggregationMode mode);

// Identifies what a condition measured; control and treatment must agree on
// everything but the condition to be compared.
struct ConditionKey {
  std::string job;
  std::string backend;
  std::string variant;
  Condition condition = Condition::Control;

  bool operator==(const ConditionKey&) const = default;
};

struct PermutationResult {
  int permutation_id = 0;
  ChoiceDistribution distribution;
};

struct AggregatedCondition {
  ConditionKey key;
  AggregationMode mode = AggregationMode::MeanOfDistributions;
  std::vector<PermutationResult> per_permutation;  // sorted by permutation id
  ChoiceDistribution mean;
  double sem_target = 0.0;  // across permutations, n - 1 denominator
  std::optional<std::size_t> total_samples;

  double p_target() const { return mean[Role::Target]; }
};

// Needs exactly one result per permutation of the condition (2 or 6).
AggregatedCondition aggregate_permutations(ConditionKey key, std::vector<PermutationResult> results);

struct BiasResult {
  double p_target_control = 0.0;
  double p_target_treatment = 0.0;
  double bias = 0.0;  // treatment - control
  std::optional<TargetCounts> control_counts;
  std::optional<TargetCounts> treatment_counts;
  std::optional<TestOutcome> test;
};

BiasResult compute_bias(const AggregatedCondition& control, const AggregatedCondition& treatment);

// Target / other counts a distribution implies at a nominal sample size.
TargetCounts nominal_counts(const ChoiceDistribution& distribution, double samples);

struct BiasCell {
  GridPoint grid;
  BiasResult bias;
};

struct RegionSummary {
  DecoyRegion region = DecoyRegion::NonDominated;
  std::size_t cells = 0;
  double mean_bias = 0.0;
};

struct BiasMap {
  std::string job;
  std::string backend;
  PhantomRule rule = PhantomRule::Dominance;
  Point target;
  Point competitor;
  std::vector<BiasCell> cells;  // decoy_grid order

  const BiasCell& at(Point p) const;
  // Regions that have at least one cell, in DecoyRegion order.
  std::vector<RegionSummary> region_summaries() const;
};

BiasMap build_bias_map(const Job& job, std::string backend, PhantomRule rule,
                       const std::vector<std::pair<Point, BiasResult>>& results);

}  // namespace decoylab
