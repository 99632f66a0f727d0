#pragma once

// Choice distributions and the pure decoding steps that produce them from raw
// backend output: surface-form merging for token log-probabilities and
// frequency counting for sampled completions.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decoylab/design.hpp"
#include "decoylab/prompt.hpp"

namespace decoylab {

inline constexpr double kNormalizationTolerance = 1e-9;

// Probabilities over option identifiers, in listing order.
struct OptionDistribution {
  std::vector<char> identifiers;
  std::vector<double> probability;
  // Matched samples; nullopt for exact log-probability decoding.
  std::optional<std::size_t> sample_count;
  std::vector<std::size_t> counts;  // per identifier, sampled decoding only
  std::size_t unmatched = 0;

  double at(char identifier) const;
  bool exact() const { return !sample_count.has_value(); }
  bool operator==(const OptionDistribution&) const = default;
};

// Probabilities over candidate roles.
struct ChoiceDistribution {
  std::array<double, 3> probability{};
  std::array<bool, 3> supported{};
  std::optional<std::size_t> sample_count;
  std::array<std::size_t, 3> counts{};  // meaningful when sample_count is set

  double operator[](Role role) const { return probability[static_cast<std::size_t>(role)]; }
  bool supports(Role role) const { return supported[static_cast<std::size_t>(role)]; }
  std::size_t count(Role role) const { return counts[static_cast<std::size_t>(role)]; }
  bool exact() const { return !sample_count.has_value(); }

  // Sum to one within kNormalizationTolerance, no negative entries.
  bool normalized() const;
};

ChoiceDistribution to_roles(const OptionDistribution& options, const Permutation& permutation);

// Case x leading-space spellings that count as a vote for `identifier`.
std::vector<std::string> surface_forms(char identifier);

// The identifier a token or trimmed sample spells, if any.
std::optional<char> match_token(std::string_view token, std::span<const char> identifiers);
std::optional<char> match_sample(std::string_view sample, std::span<const char> identifiers);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  bool operator==(const TokenLogprob&) const = default;
};

// Exponentiate, sum per identifier over its surface forms, drop everything
// else, renormalize. Throws DecodeError when no identifier token is present.
OptionDistribution decode_logprobs(std::span<const TokenLogprob> raw, std::span<const char> identifiers);

// Frequency estimate over matched samples; unmatched samples are reported but
// excluded from the denominator. Throws DecodeError when nothing matched.
OptionDistribution tally_samples(std::span<const std::string> samples, std::span<const char> identifiers);

}  // namespace decoylab
