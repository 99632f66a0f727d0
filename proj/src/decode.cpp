#include "decoylab/decode.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "decoylab/errors.hpp"

namespace decoylab {

namespace {

std::string dump_tokens(std::span<const TokenLogprob> raw) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : raw) j.push_back({{"token", t.token}, {"logprob", t.logprob}});
  return j.dump();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double OptionDistribution::at(char identifier) const {
  for (std::size_t i = 0; i < identifiers.size(); ++i) {
    if (identifiers[i] == identifier) return probability[i];
  }
  throw UsageError(std::string("identifier '") + identifier + "' not in distribution");
}

bool ChoiceDistribution::normalized() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < probability.size(); ++i) {
    if (probability[i] < 0.0 || !std::isfinite(probability[i])) return false;
    if (!supported[i] && probability[i] != 0.0) return false;
    sum += probability[i];
  }
  return std::abs(sum - 1.0) <= kNormalizationTolerance;
}

ChoiceDistribution to_roles(const OptionDistribution& options, const Permutation& permutation) {
  if (options.identifiers.size() != permutation.arity()) {
    throw UsageError("distribution and permutation list different numbers of options");
  }
  ChoiceDistribution out;
  out.sample_count = options.sample_count;
  for (std::size_t i = 0; i < options.identifiers.size(); ++i) {
    const auto r = static_cast<std::size_t>(permutation.role_of(options.identifiers[i]));
    out.probability[r] = options.probability[i];
    out.supported[r] = true;
    if (options.sample_count) out.counts[r] = options.counts[i];
  }
  return out;
}

std::vector<std::string> surface_forms(char identifier) {
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(identifier)));
  const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(identifier)));
  return {std::string(1, upper), std::string(1, lower), std::string(" ") + upper, std::string(" ") + lower};
}

std::optional<char> match_token(std::string_view token, std::span<const char> identifiers) {
  if (token.size() == 2 && token[0] == ' ') token.remove_prefix(1);
  if (token.size() != 1) return std::nullopt;
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
  for (char id : identifiers) {
    if (id == upper) return id;
  }
  return std::nullopt;
}

std::optional<char> match_sample(std::string_view sample, std::span<const char> identifiers) {
  return match_token(trim(sample), identifiers);
}

OptionDistribution decode_logprobs(std::span<const TokenLogprob> raw, std::span<const char> identifiers) {
  if (raw.empty()) throw DecodeError("empty log-probability record", dump_tokens(raw));

  // Shift by the largest identifier logprob before exponentiating.
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& t : raw) {
    if (match_token(t.token, identifiers)) shift = std::max(shift, t.logprob);
  }
  if (!std::isfinite(shift)) {
    throw DecodeError("no option identifier among the returned tokens", dump_tokens(raw));
  }

  OptionDistribution out;
  out.identifiers.assign(identifiers.begin(), identifiers.end());
  out.probability.assign(identifiers.size(), 0.0);
  for (const auto& t : raw) {
    const auto id = match_token(t.token, identifiers);
    if (!id) continue;
    const auto slot = static_cast<std::size_t>(std::find(identifiers.begin(), identifiers.end(), *id) -
                                               identifiers.begin());
    out.probability[slot] += std::exp(t.logprob - shift);
  }
  double total = 0.0;
  for (double p : out.probability) total += p;
  for (double& p : out.probability) p /= total;
  return out;
}

OptionDistribution tally_samples(std::span<const std::string> samples, std::span<const char> identifiers) {
  OptionDistribution out;
  out.identifiers.assign(identifiers.begin(), identifiers.end());
  out.counts.assign(identifiers.size(), 0);
  out.probability.assign(identifiers.size(), 0.0);
  std::size_t matched = 0;
  for (const auto& s : samples) {
    const auto id = match_sample(s, identifiers);
    if (!id) {
      ++out.unmatched;
      continue;
    }
    ++matched;
    ++out.counts[static_cast<std::size_t>(std::find(identifiers.begin(), identifiers.end(), *id) -
                                          identifiers.begin())];
  }
  if (matched == 0) {
    nlohmann::json j = samples;
    throw DecodeError("none of " + std::to_string(samples.size()) + " samples named an option", j.dump());
  }
  for (std::size_t i = 0; i < identifiers.size(); ++i) {
    out.probability[i] = static_cast<double>(out.counts[i]) / static_cast<double>(matched);
  }
  out.sample_count = matched;
  return out;
}

}  // namespace decoylab
