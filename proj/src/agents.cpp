#include "decoylab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "decoylab/errors.hpp"

namespace decoylab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Utility as an exact rational numerator / denominator over the T/C spans.
struct ScaledUtility {
  long numerator;
  long denominator;
};

ScaledUtility scaled_utility(const ChoiceSet& set, Point p) {
  const Point t = set.candidate(Role::Target).qualifications;
  const Point c = set.candidate(Role::Competitor).qualifications;
  const long lo1 = std::min(t.q1, c.q1), span1 = std::abs(t.q1 - c.q1);
  const long lo2 = std::min(t.q2, c.q2), span2 = std::abs(t.q2 - c.q2);
  return {(p.q1 - lo1) * span2 + (p.q2 - lo2) * span1, span1 * span2};
}

// Eligible candidates not dominated by another eligible candidate.
std::vector<const Candidate*> consideration_set(const ChoiceSet& set) {
  std::vector<const Candidate*> eligible;
  for (const auto& c : set.candidates()) {
    if (c.has_permit) eligible.push_back(&c);
  }
  if (eligible.empty()) throw DomainError("no candidate in the choice set holds a work permit");
  std::vector<const Candidate*> kept;
  for (const Candidate* c : eligible) {
    const bool dominated = std::any_of(eligible.begin(), eligible.end(), [c](const Candidate* o) {
      return dominates(o->qualifications, c->qualifications);
    });
    if (!dominated) kept.push_back(c);
  }
  return kept;
}

ChoiceDistribution empty_over(const ChoiceSet& set) {
  ChoiceDistribution d;
  for (const auto& c : set.candidates()) d.supported[static_cast<std::size_t>(c.role)] = true;
  return d;
}

ChoiceDistribution rational(const ChoiceSet& set) {
  const auto options = consideration_set(set);
  ChoiceDistribution d = empty_over(set);
  std::vector<const Candidate*> best;
  ScaledUtility top{0, 1};
  for (const Candidate* c : options) {
    const ScaledUtility u = scaled_utility(set, c->qualifications);
    if (best.empty() || u.numerator > top.numerator) {
      best = {c};
      top = u;
    } else if (u.numerator == top.numerator) {
      best.push_back(c);
    }
  }
  for (const Candidate* c : best) d.probability[static_cast<std::size_t>(c->role)] = 1.0 / best.size();
  return d;
}

ChoiceDistribution softmax_choice(const ChoiceSet& set, double sharpness, double bonus_strength) {
  const auto options = consideration_set(set);
  ChoiceDistribution d = empty_over(set);
  std::vector<double> scores;
  for (const Candidate* c : options) {
    double u = utility(set, *c);
    if (bonus_strength > 0.0) {
      bool bonus = false;
      for (const auto& other : set.candidates()) {
        if (&other == c) continue;
        if (dominates(c->qualifications, other.qualifications)) bonus = true;
        if (!other.has_permit && dominates(other.qualifications, c->qualifications)) bonus = true;
      }
      if (bonus) u += bonus_strength;
    }
    scores.push_back(sharpness * u);
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    z += s;
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    d.probability[static_cast<std::size_t>(options[i]->role)] = scores[i] / z;
  }
  return d;
}

ChoiceDistribution positional(const PositionBiased& agent, const ChoiceSet& set, const Permutation& perm) {
  ChoiceDistribution d = empty_over(set);
  double z = 0.0;
  for (std::size_t slot = 0; slot < perm.arity(); ++slot) z += agent.weights[slot];
  for (std::size_t slot = 0; slot < perm.arity(); ++slot) {
    d.probability[static_cast<std::size_t>(perm.role_at(slot))] = agent.weights[slot] / z;
  }
  return d;
}

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw UsageError(std::string(what) + " must be positive and finite");
}

}  // namespace

void AgentSpec::validate() const {
  std::visit(overloaded{
                 [](const RationalEqualWeights&) {},
                 [](const NoisyRational& a) { require_finite_positive(a.sharpness, "sharpness"); },
                 [](const DecoyKernel& a) {
                   require_finite_positive(a.sharpness, "sharpness");
                   if (!std::isfinite(a.strength) || a.strength < 0.0) {
                     throw UsageError("decoy kernel strength must be finite and non-negative");
                   }
                 },
                 [](const PositionBiased& a) {
                   for (double w : a.weights) require_finite_positive(w, "identifier weight");
                 },
             },
             kind);
}

std::string AgentSpec::describe() const {
  return std::visit(overloaded{
                        [](const RationalEqualWeights&) { return std::string("rational"); },
                        [](const NoisyRational& a) { return "noisy_rational(sharpness=" + num(a.sharpness) + ")"; },
                        [](const DecoyKernel& a) {
                          return "decoy_kernel(strength=" + num(a.strength) + ",sharpness=" + num(a.sharpness) +
                                 ")";
                        },
                        [](const PositionBiased& a) {
                          return "position_biased(A=" + num(a.weights[0]) + ",B=" + num(a.weights[1]) +
                                 ",C=" + num(a.weights[2]) + ")";
                        },
                    },
                    kind);
}

double utility(const ChoiceSet& choice_set, const Candidate& candidate) {
  const ScaledUtility u = scaled_utility(choice_set, candidate.qualifications);
  return static_cast<double>(u.numerator) / static_cast<double>(u.denominator);
}

ChoiceDistribution agent_choose(const AgentSpec& spec, const ChoiceSet& choice_set, const Permutation& permutation) {
  if (permutation.arity() != choice_set.size()) throw UsageError("permutation does not match the choice set");
  spec.validate();
  return std::visit(overloaded{
                        [&](const RationalEqualWeights&) { return rational(choice_set); },
                        [&](const NoisyRational& a) { return softmax_choice(choice_set, a.sharpness, 0.0); },
                        [&](const DecoyKernel& a) { return softmax_choice(choice_set, a.sharpness, a.strength); },
                        [&](const PositionBiased& a) { return positional(a, choice_set, permutation); },
                    },
                    spec.kind);
}

SimulatedBackend::SimulatedBackend(AgentSpec spec, BackendCapability capability)
    : spec_(std::move(spec)), capability_(capability) {
  spec_.validate();
  capability_.validate();
}

std::string SimulatedBackend::id() const {
  return "simulated:" + spec_.describe() + ";seed=" + std::to_string(spec_.seed);
}

RawOutput SimulatedBackend::complete(const Request& request) {
  const Permutation& perm = request.prompt.permutation;
  const ChoiceDistribution dist = agent_choose(spec_, request.choice_set, perm);
  const std::vector<char> ids = perm.identifiers();
  RawOutput out;

  if (capability_.mode == DecodingMode::TokenLogprobs) {
    for (char id : ids) {
      const double p = dist[perm.role_of(id)];
      if (p <= 0.0) continue;
      out.top_logprobs.push_back({std::string(1, id), std::log(0.9 * p)});
      out.top_logprobs.push_back({std::string(" ") + static_cast<char>(id - 'A' + 'a'), std::log(0.1 * p)});
    }
    out.top_logprobs.push_back({"The", std::log(1e-3)});
    std::stable_sort(out.top_logprobs.begin(), out.top_logprobs.end(),
                     [](const TokenLogprob& a, const TokenLogprob& b) { return a.logprob > b.logprob; });
    if (out.top_logprobs.size() > static_cast<std::size_t>(capability_.top_k)) {
      out.top_logprobs.resize(static_cast<std::size_t>(capability_.top_k));
    }
    return out;
  }

  // Per-sample randomness depends only on (seed, prompt, sample index).
  const std::string digest = sha256_hex(std::to_string(spec_.seed) + "|" + request.prompt_hash + "|" +
                                        std::to_string(request.sample_index));
  const std::uint64_t state = std::stoull(digest.substr(0, 16), nullptr, 16);
  std::mt19937_64 rng(state);

  std::vector<double> weights;
  for (char id : ids) weights.push_back(std::pow(dist[perm.role_of(id)], 1.0 / capability_.temperature));
  double z = 0.0;
  for (double w : weights) z += w;
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * z;
  std::size_t pick = 0;
  double acc = 0.0;
  for (; pick + 1 < weights.size(); ++pick) {
    acc += weights[pick];
    if (u < acc) break;
  }
  while (weights[pick] <= 0.0 && pick > 0) --pick;
  const auto forms = surface_forms(ids[pick]);
  out.samples.push_back(forms[rng() % forms.size()]);
  return out;
}

}  // namespace decoylab
