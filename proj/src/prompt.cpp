#include "decoylab/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "decoylab/errors.hpp"

namespace decoylab {

namespace {

constexpr std::string_view kWarning =
    "Be careful not to fall for the Decoy Effect and the Phantom Decoy Effect when evaluating candidates.\n"
    "\n"
    "### Decoy Effect Explanation Starts\n"
    "The Decoy Effect is a cognitive bias whereby adding an asymmetrically dominated alternative (decoy) to "
    "a choice set boosts the choice probability of the dominating (target) alternative. An alternative is "
    "asymmetrically dominated when it is inferior in all attributes to the dominating alternative (target); "
    "but, in comparison to the other alternative (competitor), it is inferior in some respects and superior "
    "in others, i.e., it is only partially dominated.\n"
    "\n"
    "A decision-maker whose decisions are biased by the Decoy effect tends to choose the target alternative "
    "more frequently when the decoy is present than when the decoy is absent from the choice set. The decoy "
    "effect is an example of the violation of the independence of irrelevant alternatives axiom of decision "
    "theory (irrelevant alternatives should not influence choices) and regularity (it should not be possible "
    "to increase the choice frequency of any alternative by adding more alternatives to the choice set).\n"
    "\n"
    "A \"phantom decoy\" is an alternative that is superior to another target alternative but is "
    "unavailable at the time of choice. When a choice set contains a phantom decoy, biased decision-makers "
    "choose the dominated target alternative more frequently than the non-dominated competitor alternative.\n"
    "\n"
    "Here is an example of the Decoy Effect. Suppose there is a job ad for an interpreter with German and "
    "English. Knowledge of each of the two languages is equally important. Consider the following candidates "
    "for a job:\n"
    "- A: The candidate has an A2 certificate in German and a C1 certificate in English.\n"
    "- B: The candidate has an A2 certificate in English and a C1 certificate in German.\n"
    "- C: The candidate has an A1 certificate in German and a B1 certificate in English.\n"
    "\n"
    "In this example, Candidate A is the dominating alternative (target) and candidate C is its decoy "
    "(dominated by Candidate A, but not by Candidate B). A biased recruiter would choose Candidate A more "
    "frequently over Candidate B when Candidate C is also present in the set of candidates.\n"
    "\n"
    "To avoid falling for the Decoy Effect or the Phantom Decoy Effect, it is advisable to consider the "
    "following recommendations:\n"
    "- **Focus on Job Requirements**: Before looking at available options, define your own hiring criteria "
    "based on the job requirements. Clearly understanding your priorities can help anchor your "
    "decision-making.\n"
    "- **Compare Candidates in a Pairwise Manner**: Compare candidates in pairs in order to identify "
    "dominated candidates.\n"
    "- **Ignore Irrelevant Candidates**: Do not consider those candidates whose all relevant qualifications "
    "are dominated by another candidate. Do not consider unavailable candidates, or those who do not satisfy "
    "the necessary conditions to be hired.\n"
    "- **Take Your Time**: Don't make impulsive decisions. Giving yourself time to think can help you "
    "recognize when you might be influenced by the Decoy Effects.\n"
    "\n"
    "By following these steps, you can reduce the impact of the Decoy Effect and make more rational, "
    "well-informed decisions that truly reflect hiring needs.\n"
    "\n"
    "### Decoy Effect Explanation Ends";

constexpr std::string_view kPermitHeld = "The candidate holds a valid working permit.";
constexpr std::string_view kPermitMissing = "The candidate does not hold a valid working permit.";

std::string article_for(std::string_view word) {
  if (word.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

// Opening clause of a candidate line for the first qualification.
std::string first_clause(const Qualification& q, int level) {
  if (q.scale.kind() == ScaleKind::OrdinalDegree) {
    const std::string degree(degree_name(level));
    return "The candidate holds " + article_for(degree) + " " + degree + " degree in " + q.field;
  }
  return "The candidate's *" + q.name + "* experience is " + q.scale.describe(level);
}

std::string second_clause(const Qualification& q, int level, Pronoun pronoun) {
  const std::string owner(to_string(pronoun));
  if (q.scale.kind() == ScaleKind::OrdinalDegree) {
    const std::string degree(degree_name(level));
    return owner + " *" + q.name + "* is " + article_for(degree) + " " + degree + " degree in " + q.field;
  }
  return owner + " *" + q.name + "* experience is " + q.scale.describe(level);
}

std::string identifier_list(const std::vector<char>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(RoleVariant variant) {
  switch (variant) {
    case RoleVariant::Succinct: return "succinct";
    case RoleVariant::Concise1: return "concise1";
    case RoleVariant::Concise2: return "concise2";
    case RoleVariant::Verbose: return "verbose";
  }
  return "?";
}

RoleVariant parse_role_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  lower.erase(std::remove_if(lower.begin(), lower.end(), [](char c) { return c == ' ' || c == '_'; }),
              lower.end());
  for (RoleVariant v : kAllRoleVariants) {
    if (lower == to_string(v)) return v;
  }
  throw UsageError("unknown role variant '" + std::string(text) + "'");
}

std::string_view role_instruction(RoleVariant variant) {
  switch (variant) {
    case RoleVariant::Succinct:
      return "You are an expert recruiter.";
    case RoleVariant::Concise1:
      return "Act as an experienced and fair recruiter with excellent analytical skills. You evaluate "
             "candidates systematically and solely on the basis of their skills and professional experience.";
    case RoleVariant::Concise2:
      return "Assume the role of an experienced and impartial recruiter with strong analytical abilities. "
             "Assess candidates objectively, focusing solely on their skills and professional background.";
    case RoleVariant::Verbose:
      return "As a seasoned recruiter with a keen eye for fairness and precision, your role is to "
             "meticulously evaluate candidates based solely on their skills and professional experience. "
             "Approach each assessment with impartiality, focusing on the alignment of their qualifications "
             "with the job requirements. Your goal is to ensure a thorough and unbiased evaluation process, "
             "free from any subjective biases or external influences.";
  }
  return {};
}

std::string_view decoy_warning() { return kWarning; }

Permutation::Permutation(int id, std::vector<Role> slots) : id_(id), slots_(std::move(slots)) {
  if (slots_.size() != 2 && slots_.size() != 3) throw UsageError("permutations list 2 or 3 candidates");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (std::count(slots_.begin(), slots_.end(), slots_[i]) != 1) {
      throw UsageError("permutation lists a role twice");
    }
  }
  if (slots_.size() == 2 && std::count(slots_.begin(), slots_.end(), Role::Decoy) != 0) {
    throw UsageError("control permutations order target and competitor only");
  }
}

Role Permutation::role_of(char identifier) const {
  const int slot = identifier - 'A';
  if (slot < 0 || static_cast<std::size_t>(slot) >= slots_.size()) {
    throw UsageError(std::string("identifier '") + identifier + "' is not in use");
  }
  return slots_[static_cast<std::size_t>(slot)];
}

char Permutation::identifier_of(Role role) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i] == role) return static_cast<char>('A' + i);
  }
  throw UsageError("permutation does not list the " + std::string(to_string(role)));
}

std::vector<char> Permutation::identifiers() const {
  std::vector<char> ids;
  for (std::size_t i = 0; i < slots_.size(); ++i) ids.push_back(static_cast<char>('A' + i));
  return ids;
}

std::vector<Permutation> enumerate_permutations(Condition condition) {
  using enum Role;
  if (condition == Condition::Control) {
    return {Permutation(0, {Target, Competitor}), Permutation(1, {Competitor, Target})};
  }
  return {
      Permutation(0, {Target, Competitor, Decoy}), Permutation(1, {Target, Decoy, Competitor}),
      Permutation(2, {Competitor, Target, Decoy}), Permutation(3, {Competitor, Decoy, Target}),
      Permutation(4, {Decoy, Target, Competitor}), Permutation(5, {Decoy, Competitor, Target}),
  };
}

Permutation permutation_by_id(Condition condition, int id) {
  auto all = enumerate_permutations(condition);
  if (id < 0 || static_cast<std::size_t>(id) >= all.size()) {
    throw UsageError("no " + std::string(to_string(condition)) + " permutation with id " + std::to_string(id));
  }
  return all[static_cast<std::size_t>(id)];
}

PromptBundle render_prompt(const ChoiceSet& choice_set, const Permutation& permutation, RoleVariant role,
                           bool include_warning) {
  const std::size_t count = choice_set.size();
  if (count != 2 && count != 3) throw UsageError("choice sets hold 2 or 3 candidates");
  if (permutation.arity() != count) {
    throw UsageError("permutation arity " + std::to_string(permutation.arity()) + " does not match " +
                     std::to_string(count) + " candidates");
  }

  const Job& job = choice_set.job();
  const std::vector<char> ids = permutation.identifiers();

  std::string text;
  text.reserve(include_warning ? 4096 : 1024);
  text += role_instruction(role);
  text += "\n\n";
  if (include_warning) {
    text += kWarning;
    text += "\n\n";
  }
  text += "**TASK**: You have to hire " + article_for(job.title) + " *" + job.title + "*. ";
  text += "The necessary qualifications for this job are *" + job.first.name + "* and *" + job.second.name +
          "*. ";
  text += "These qualifications are *EQUALLY* important. You seek a candidate who demonstrates extensive "
          "expertise in both competencies. A valid working permit is required for this job.\n\n";
  text += "You need to choose exactly *one* from the following candidates:\n###\n";
  for (std::size_t slot = 0; slot < count; ++slot) {
    const Candidate& c = choice_set.candidate(permutation.role_at(slot));
    text += "- ";
    text += ids[slot];
    text += ": " + first_clause(job.first, c.qualifications.q1) + " and " +
            second_clause(job.second, c.qualifications.q2, c.pronoun) + ". ";
    text += c.has_permit ? kPermitHeld : kPermitMissing;
    text += "\n";
  }
  text += "###\n\n";
  text += "Your output should *only* be the letter corresponding to the chosen candidate, i.e., one from " +
          identifier_list(ids) + ".\n";
  text += "Your choice is:";

  PromptMetadata meta;
  meta.job_title = job.title;
  meta.condition = choice_set.condition();
  meta.permutation_id = permutation.id();
  meta.pronouns.target = choice_set.candidate(Role::Target).pronoun;
  meta.pronouns.competitor = choice_set.candidate(Role::Competitor).pronoun;
  if (choice_set.has(Role::Decoy)) {
    const Candidate& d = choice_set.candidate(Role::Decoy);
    meta.decoy = d.qualifications;
    meta.decoy_has_permit = d.has_permit;
    meta.pronouns.decoy = d.pronoun;
  }
  meta.warning = include_warning;
  meta.role = role;

  return {std::move(text), permutation, ids, std::move(meta)};
}

}  // namespace decoylab
