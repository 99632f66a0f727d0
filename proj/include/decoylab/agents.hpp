#pragma once

// Simulated decision-makers with analytically known behaviour. They read the
// structured choice set directly and serve as pipeline oracles.

#include <array>
#include <cstdint>
#include <string>
#include <variant>

#include "decoylab/backend.hpp"
#include "decoylab/decode.hpp"
#include "decoylab/design.hpp"
#include "decoylab/prompt.hpp"

namespace decoylab {

// Argmax of equal-weight utility; exact ties split uniformly.
struct RationalEqualWeights {};

// Softmax over the same utilities.
struct NoisyRational {
  double sharpness = 1.0;
};

// NoisyRational plus a bonus for any option that dominates another displayed
// option, or that is dominated by a displayed phantom.
struct DecoyKernel {
  double strength = 1.0;
  double sharpness = 1.0;
};

// Ignores content; probability proportional to the weight of each identifier.
struct PositionBiased {
  std::array<double, 3> weights{0.9, 0.05, 0.05};  // A, B, C
};

using AgentKind = std::variant<RationalEqualWeights, NoisyRational, DecoyKernel, PositionBiased>;

struct AgentSpec {
  AgentKind kind;
  std::uint64_t seed = 0;

  void validate() const;       // UsageError on non-finite or out-of-range parameters
  std::string describe() const;  // stable, used in backend ids
};

// Equal-weight utility of a candidate: each attribute is min-max scaled over
// the target/competitor pair, so both score exactly 1 and a decoy never moves the scale.
double utility(const ChoiceSet& choice_set, const Candidate& candidate);

ChoiceDistribution agent_choose(const AgentSpec& spec, const ChoiceSet& choice_set,
                                const Permutation& permutation);

// Backend that answers from an agent: exact log-probabilities split over two
// surface forms, or one sampled identifier per request.
class SimulatedBackend : public Backend {
 public:
  SimulatedBackend(AgentSpec spec, BackendCapability capability);

  std::string id() const override;
  BackendCapability capability() const override { return capability_; }
  RawOutput complete(const Request& request) override;

 private:
  AgentSpec spec_;
  BackendCapability capability_;
};

}  // namespace decoylab
