#pragma once

// Deterministic assembly of candidate-selection prompts.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decoylab/design.hpp"

namespace decoylab {

enum class RoleVariant { Succinct, Concise1, Concise2, Verbose };

inline constexpr RoleVariant kAllRoleVariants[] = {RoleVariant::Succinct, RoleVariant::Concise1,
                                                   RoleVariant::Concise2, RoleVariant::Verbose};

std::string_view to_string(RoleVariant variant);
RoleVariant parse_role_variant(std::string_view text);
std::string_view role_instruction(RoleVariant variant);

// Warning sub-prompt inserted right after the role instruction.
std::string_view decoy_warning();

// Assignment of roles to option identifiers A, B(, C).
class Permutation {
 public:
  Permutation(int id, std::vector<Role> slots);

  int id() const { return id_; }
  std::size_t arity() const { return slots_.size(); }
  Condition condition() const { return slots_.size() == 2 ? Condition::Control : Condition::Treatment; }

  Role role_at(std::size_t slot) const { return slots_.at(slot); }
  Role role_of(char identifier) const;  // UsageError for unknown identifiers
  char identifier_of(Role role) const;  // UsageError when the role is not listed
  std::vector<char> identifiers() const;
  const std::vector<Role>& slots() const { return slots_; }

  bool operator==(const Permutation&) const = default;

 private:
  int id_;
  std::vector<Role> slots_;
};

// Treatment: the six orderings with ids 0..5; control: the two orderings of target/competitor.
std::vector<Permutation> enumerate_permutations(Condition condition);
Permutation permutation_by_id(Condition condition, int id);

struct PromptMetadata {
  std::string job_title;
  Condition condition = Condition::Treatment;
  int permutation_id = 0;
  std::optional<Point> decoy;
  bool decoy_has_permit = true;
  PronounScheme pronouns;
  bool warning = false;
  RoleVariant role = RoleVariant::Concise1;

  bool operator==(const PromptMetadata&) const = default;
};

struct PromptBundle {
  std::string text;
  Permutation permutation;
  std::vector<char> identifiers;  // listing order
  PromptMetadata metadata;
};

PromptBundle render_prompt(const ChoiceSet& choice_set, const Permutation& permutation,
                           RoleVariant role = RoleVariant::Concise1, bool include_warning = false);

}  // namespace decoylab
