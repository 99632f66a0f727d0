#include <gtest/gtest.h>

#include <cmath>

#include "decoylab/agents.hpp"
#include "decoylab/analysis.hpp"
#include "decoylab/config.hpp"
#include "decoylab/errors.hpp"

using namespace decoylab;

namespace {

const double kLogisticOne = 1.0 / (1.0 + std::exp(-1.0));

// P(target) averaged over every ordering of the set.
double mean_target(const AgentSpec& spec, const ChoiceSet& set) {
  const auto perms = enumerate_permutations(set.condition());
  double total = 0;
  for (const auto& p : perms) total += agent_choose(spec, set, p)[Role::Target];
  return total / static_cast<double>(perms.size());
}

double bias_at(const AgentSpec& spec, const Job& job, Point decoy, bool permit) {
  return mean_target(spec, choice_set_with_decoy(job, decoy, permit)) -
         mean_target(spec, baseline_choice_set(job, Condition::Control));
}

std::vector<GridPoint> grid_of(const Job& job) {
  const auto pos = baseline_positions(job);
  return decoy_grid(job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor});
}

}  // namespace

TEST(ClosedForm, DecoyKernelUnitParametersOnEveryJob) {
  const AgentSpec kernel{DecoyKernel{1.0, 1.0}};
  for (const auto& job : builtin_jobs()) {
    const auto control = baseline_choice_set(job, Condition::Control);
    const auto treatment = baseline_choice_set(job, Condition::Treatment);
    for (const auto& p : enumerate_permutations(Condition::Control)) {
      EXPECT_NEAR(agent_choose(kernel, control, p)[Role::Target], 0.5, 1e-15) << job.title;
    }
    for (const auto& p : enumerate_permutations(Condition::Treatment)) {
      const auto d = agent_choose(kernel, treatment, p);
      EXPECT_NEAR(d[Role::Target], kLogisticOne, 1e-15) << job.title;
      EXPECT_EQ(d[Role::Decoy], 0.0);
    }
    EXPECT_NEAR(bias_at(kernel, job, baseline_positions(job).decoy, true), kLogisticOne - 0.5, 1e-15);
  }
}

TEST(ClosedForm, NoisyRationalShowsNoEffectForDominatedDecoys) {
  const AgentSpec noisy{NoisyRational{2.0}};
  for (const auto& job : builtin_jobs()) {
    EXPECT_NEAR(bias_at(noisy, job, baseline_positions(job).decoy, true), 0.0, 1e-15);
  }
}

TEST(Rational, Examples) {
  const AgentSpec rational{RationalEqualWeights{}};
  const Job& nurse = find_job("Nurse");
  const auto perm = permutation_by_id(Condition::Treatment, 0);
  // T and C tie; the dominated decoy is never chosen.
  const auto base = agent_choose(rational, baseline_choice_set(nurse, Condition::Treatment), perm);
  EXPECT_EQ(base[Role::Target], 0.5);
  EXPECT_EQ(base[Role::Competitor], 0.5);
  EXPECT_EQ(base[Role::Decoy], 0.0);
  // A dominating decoy with a permit wins outright.
  const auto strong = agent_choose(rational, choice_set_with_decoy(nurse, {7, 7}, true), perm);
  EXPECT_EQ(strong[Role::Decoy], 1.0);
  // Without the permit it is ignored.
  const auto phantom = agent_choose(rational, choice_set_with_decoy(nurse, {7, 7}, false), perm);
  EXPECT_EQ(phantom[Role::Decoy], 0.0);
  EXPECT_EQ(phantom[Role::Target], 0.5);
  // Equal utility non-dominated decoy three-way tie: (4,5) scores 1 as well.
  const auto tie = agent_choose(rational, choice_set_with_decoy(nurse, {4, 5}, true), perm);
  EXPECT_NEAR(tie[Role::Decoy], 1.0 / 3.0, 1e-15);
}

TEST(Rational, UtilityIsMinMaxScaled) {
  const auto set = choice_set_with_decoy(find_job("Nurse"), {2, 5}, true);
  EXPECT_DOUBLE_EQ(utility(set, set.candidate(Role::Target)), 1.0);
  EXPECT_DOUBLE_EQ(utility(set, set.candidate(Role::Competitor)), 1.0);
  EXPECT_DOUBLE_EQ(utility(set, set.candidate(Role::Decoy)), 1.0 / 3.0);
}

TEST(Regularity, RationalAgentsNeverGainShareFromAnAddedOption) {
  for (const AgentSpec& spec : {AgentSpec{RationalEqualWeights{}}, AgentSpec{NoisyRational{0.5}}, AgentSpec{NoisyRational{4.0}}}) {
    for (const auto& job : builtin_jobs()) {
      for (const auto& g : grid_of(job)) {
        for (bool permit : {true, false}) {
          EXPECT_LE(bias_at(spec, job, g.point, permit), 1e-12) << spec.describe() << " " << job.title;
        }
      }
    }
  }
}

TEST(Invariance, ContentAgentsIgnoreOrdering) {
  for (const AgentSpec& spec : {AgentSpec{RationalEqualWeights{}}, AgentSpec{NoisyRational{1.5}}, AgentSpec{DecoyKernel{0.7, 2.0}}}) {
    for (const auto& job : builtin_jobs()) {
      for (const auto& g : grid_of(job)) {
        const auto set = choice_set_with_decoy(job, g.point, g.has_permit);
        const auto first = agent_choose(spec, set, permutation_by_id(Condition::Treatment, 0));
        for (const auto& p : enumerate_permutations(Condition::Treatment)) {
          const auto d = agent_choose(spec, set, p);
          for (Role r : {Role::Target, Role::Competitor, Role::Decoy}) ASSERT_EQ(d[r], first[r]);
        }
      }
    }
  }
}

TEST(DecoyKernel, BiasGrowsWithStrength) {
  const Job& nurse = find_job("Nurse");
  double previous = -1;
  for (double strength : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double b = bias_at({DecoyKernel{strength, 1.0}}, nurse, {2, 5}, true);
    EXPECT_GT(b, previous);
    previous = b;
  }
  EXPECT_NEAR(bias_at({DecoyKernel{0.0, 1.0}}, nurse, {2, 5}, true), 0.0, 1e-15);
}

TEST(DecoyKernel, PhantomAndCompetitorDecoys) {
  const AgentSpec kernel{DecoyKernel{1.0, 1.0}};
  const Job& nurse = find_job("Nurse");
  // A phantom that dominates only the target boosts the target.
  EXPECT_NEAR(bias_at(kernel, nurse, {4, 7}, false), kLogisticOne - 0.5, 1e-15);
  // A decoy dominated by the competitor helps the competitor.
  EXPECT_NEAR(bias_at(kernel, nurse, {5, 2}, true), 0.5 - kLogisticOne, 1e-15);
  // Dominated by both: symmetric.
  EXPECT_NEAR(bias_at(kernel, nurse, {2, 2}, true), 0.0, 1e-15);
}

TEST(PositionBiased, AveragesToUniformOverOrderings) {
  const AgentSpec spec{PositionBiased{}};
  for (const auto& job : builtin_jobs()) {
    EXPECT_NEAR(mean_target(spec, baseline_choice_set(job, Condition::Treatment)), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(mean_target(spec, baseline_choice_set(job, Condition::Control)), 0.5, 1e-15);
  }
  const auto d = agent_choose(spec, baseline_choice_set(find_job("Nurse"), Condition::Treatment),
                              permutation_by_id(Condition::Treatment, 4));  // D T C
  EXPECT_NEAR(d[Role::Decoy], 0.9, 1e-15);
  EXPECT_NEAR(d[Role::Target], 0.05, 1e-15);
}

TEST(Validation, RejectsBadParameters) {
  EXPECT_THROW((AgentSpec{NoisyRational{0.0}}.validate()), UsageError);
  EXPECT_THROW((AgentSpec{NoisyRational{INFINITY}}.validate()), UsageError);
  EXPECT_THROW((AgentSpec{DecoyKernel{-1.0, 1.0}}.validate()), UsageError);
  EXPECT_THROW((AgentSpec{PositionBiased{{1.0, 0.0, 1.0}}}.validate()), UsageError);
  EXPECT_NO_THROW((AgentSpec{DecoyKernel{0.0, 1.0}}.validate()));
}

TEST(SimulatedBackend, LogprobsDecodeBackToTheAgent) {
  const AgentSpec spec{DecoyKernel{1.0, 1.0}, 5};
  SimulatedBackend backend(spec, {});
  const auto set = baseline_choice_set(find_job("Welder"), Condition::Treatment);
  for (const auto& perm : enumerate_permutations(Condition::Treatment)) {
    const auto prompt = render_prompt(set, perm);
    const auto raw = backend.complete({prompt, set, prompt_hash(prompt), 0});
    const auto decoded = to_roles(decode_logprobs(raw.top_logprobs, prompt.identifiers), perm);
    const auto truth = agent_choose(spec, set, perm);
    for (Role r : {Role::Target, Role::Competitor, Role::Decoy}) EXPECT_NEAR(decoded[r], truth[r], 1e-12);
  }
}

TEST(SimulatedBackend, SamplesAreDeterministicPerSeed) {
  const BackendCapability cap{DecodingMode::SampleOnly, 100, 1.0};
  SimulatedBackend a({NoisyRational{1.0}, 9}, cap), b({NoisyRational{1.0}, 9}, cap), c({NoisyRational{1.0}, 10}, cap);
  const auto set = choice_set_with_decoy(find_job("Nurse"), {4, 5}, true);
  const auto prompt = render_prompt(set, permutation_by_id(Condition::Treatment, 1));
  std::string sa, sc;
  for (std::size_t i = 0; i < 40; ++i) {
    const Request r{prompt, set, prompt_hash(prompt), i};
    const auto x = a.complete(r).samples.at(0);
    EXPECT_EQ(x, b.complete(r).samples.at(0));
    sa += x;
    sc += c.complete(r).samples.at(0);
  }
  EXPECT_NE(sa, sc);
}

TEST(SimulatedBackend, SampledEstimateStaysNearTheClosedForm) {
  // 600 samples per condition; SE is about 0.018, so +-0.06 is beyond 3 SE.
  const BackendCapability cap{DecodingMode::SampleOnly, 100, 1.0};
  const auto set = baseline_choice_set(find_job("Nurse"), Condition::Treatment);
  int outside = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SimulatedBackend backend({DecoyKernel{1.0, 1.0}, seed}, cap);
    ResponseCache cache;
    Interrogator it(backend.id(), cap, &backend, cache);
    std::vector<PermutationResult> results;
    for (const auto& perm : enumerate_permutations(Condition::Treatment)) {
      const auto prompt = render_prompt(set, perm);
      results.push_back({perm.id(), to_roles(estimate_by_sampling(it, prompt, set, 100), perm)});
    }
    const auto agg = aggregate_permutations({"Nurse", backend.id(), "baseline", Condition::Treatment}, results);
    EXPECT_EQ(*agg.total_samples, 600u);
    if (std::abs(agg.p_target() - kLogisticOne) > 0.06) ++outside;
  }
  EXPECT_LE(outside, 2);
}

TEST(SimulatedBackend, IdMatchesTheConfiguredBackendId) {
  for (const auto& [name, spec] : builtin_backends()) {
    for (auto mode : {DecodingMode::TokenLogprobs, DecodingMode::SampleOnly}) {
      DecodingConfig decoding;
      decoding.mode = mode;
      const auto backend = make_backend(spec, decoding, 42);
      EXPECT_EQ(backend->id(), backend_id(spec, 42)) << name;
    }
  }
}
