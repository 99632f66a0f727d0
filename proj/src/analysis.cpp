#include "decoylab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "decoylab/errors.hpp"

namespace decoylab {

std::string_view to_string(AggregationMode mode) {
  return mode == AggregationMode::MeanOfDistributions ? "mean_of_distributions" : "pooled_counts";
}

AggregatedCondition aggregate_permutations(ConditionKey key, std::vector<PermutationResult> results) {
  const int expected = key.condition == Condition::Control ? 2 : 6;
  std::sort(results.begin(), results.end(),
            [](const PermutationResult& a, const PermutationResult& b) { return a.permutation_id < b.permutation_id; });
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int id = results[i].permutation_id;
    if (id < 0 || id >= expected) throw UsageError("permutation id " + std::to_string(id) + " out of range");
    if (i > 0 && results[i - 1].permutation_id == id) {
      throw UsageError("permutation " + std::to_string(id) + " given twice");
    }
    if (!results[i].distribution.normalized()) {
      throw UsageError("permutation " + std::to_string(id) + " distribution is not normalized");
    }
  }
  if (static_cast<int>(results.size()) != expected) {
    throw IncompleteDataError(key.job + "/" + std::string(to_string(key.condition)) + ": have " +
                              std::to_string(results.size()) + " of " + std::to_string(expected) + " permutations");
  }

  const bool sampled = !results.front().distribution.exact();
  for (const auto& r : results) {
    if (r.distribution.exact() == sampled) throw UsageError("cannot mix exact and sampled distributions");
  }

  AggregatedCondition out;
  out.key = std::move(key);
  out.mode = sampled ? AggregationMode::PooledCounts : AggregationMode::MeanOfDistributions;
  out.mean.supported = results.front().distribution.supported;

  if (sampled) {
    std::size_t total = 0;
    for (const auto& r : results) {
      for (std::size_t i = 0; i < 3; ++i) out.mean.counts[i] += r.distribution.counts[i];
      total += *r.distribution.sample_count;
    }
    if (total == 0) throw IncompleteDataError("no matched samples");
    for (std::size_t i = 0; i < 3; ++i) {
      out.mean.probability[i] = static_cast<double>(out.mean.counts[i]) / static_cast<double>(total);
    }
    out.mean.sample_count = total;
    out.total_samples = total;
  } else {
    for (const auto& r : results) {
      for (std::size_t i = 0; i < 3; ++i) out.mean.probability[i] += r.distribution.probability[i];
    }
    for (double& p : out.mean.probability) p /= static_cast<double>(results.size());
  }

  double mean_target = 0.0;
  for (const auto& r : results) mean_target += r.distribution[Role::Target];
  mean_target /= static_cast<double>(results.size());
  double ss = 0.0;
  for (const auto& r : results) {
    const double dev = r.distribution[Role::Target] - mean_target;
    ss += dev * dev;
  }
  const double n = static_cast<double>(results.size());
  out.sem_target = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  out.per_permutation = std::move(results);
  return out;
}

TargetCounts nominal_counts(const ChoiceDistribution& distribution, double samples) {
  const double target = distribution[Role::Target] * samples;
  return {target, samples - target};
}

namespace {

TargetCounts counts_of(const AggregatedCondition& c) {
  const double target = static_cast<double>(c.mean.count(Role::Target));
  return {target, static_cast<double>(*c.total_samples) - target};
}

}  // namespace

BiasResult compute_bias(const AggregatedCondition& control, const AggregatedCondition& treatment) {
  if (control.key.condition != Condition::Control || treatment.key.condition != Condition::Treatment) {
    throw UsageError("compute_bias needs a control and a treatment condition");
  }
  if (control.key.job != treatment.key.job || control.key.backend != treatment.key.backend ||
      control.key.variant != treatment.key.variant) {
    throw UsageError("control and treatment differ in job, backend or variant");
  }
  BiasResult r;
  r.p_target_control = control.p_target();
  r.p_target_treatment = treatment.p_target();
  r.bias = r.p_target_treatment - r.p_target_control;
  if (control.mode == AggregationMode::PooledCounts && treatment.mode == AggregationMode::PooledCounts) {
    r.control_counts = counts_of(control);
    r.treatment_counts = counts_of(treatment);
  }
  return r;
}

const BiasCell& BiasMap::at(Point p) const {
  for (const auto& c : cells) {
    if (c.grid.point == p) return c;
  }
  throw UsageError("bias map has no cell at (" + std::to_string(p.q1) + ", " + std::to_string(p.q2) + ")");
}

std::vector<RegionSummary> BiasMap::region_summaries() const {
  std::vector<RegionSummary> out;
  for (DecoyRegion region : kAllRegions) {
    RegionSummary s{region, 0, 0.0};
    for (const auto& c : cells) {
      if (c.grid.region != region) continue;
      ++s.cells;
      s.mean_bias += c.bias.bias;
    }
    if (s.cells == 0) continue;
    s.mean_bias /= static_cast<double>(s.cells);
    out.push_back(s);
  }
  return out;
}

BiasMap build_bias_map(const Job& job, std::string backend, PhantomRule rule,
                       const std::vector<std::pair<Point, BiasResult>>& results) {
  const BaselinePositions pos = baseline_positions(job);
  const Candidate target{Role::Target, pos.target};
  const Candidate competitor{Role::Competitor, pos.competitor};
  const auto grid = decoy_grid(job, target, competitor, rule);

  std::map<Point, const BiasResult*> by_point;
  for (const auto& [p, r] : results) {
    if (!by_point.emplace(p, &r).second) {
      throw UsageError("two results for grid point (" + std::to_string(p.q1) + ", " + std::to_string(p.q2) + ")");
    }
  }

  BiasMap map;
  map.job = job.title;
  map.backend = std::move(backend);
  map.rule = rule;
  map.target = pos.target;
  map.competitor = pos.competitor;
  for (const auto& g : grid) {
    auto it = by_point.find(g.point);
    if (it == by_point.end()) {
      throw IncompleteDataError("bias map for " + job.title + " is missing cell (" + std::to_string(g.point.q1) +
                                ", " + std::to_string(g.point.q2) + ")");
    }
    map.cells.push_back({g, *it->second});
    by_point.erase(it);
  }
  if (!by_point.empty()) throw UsageError("result for a point outside the decoy grid");
  return map;
}

}  // namespace decoylab
