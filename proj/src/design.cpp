#include "decoylab/design.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "decoylab/errors.hpp"

namespace decoylab {

namespace {

constexpr std::array<std::string_view, 5> kDegreeNames = {"Certificate", "Bachelor", "Master", "PhD",
                                                          "PostDoc"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

Qualification years(std::string name) { return {std::move(name), QualificationScale::years(), {}}; }

Qualification degree(std::string name, std::string field) {
  return {std::move(name), QualificationScale::degree(), std::move(field)};
}

}  // namespace

std::string QualificationScale::describe(int level) const {
  if (!contains(level)) {
    throw DomainError("qualification level " + std::to_string(level) + " is off the scale");
  }
  if (kind_ == ScaleKind::OrdinalDegree) return std::string(degree_name(level));
  return std::to_string(level) + (level == 1 ? " year" : " years");
}

std::string_view degree_name(int rank) {
  if (rank < 1 || rank > 5) throw DomainError("degree rank " + std::to_string(rank) + " is off the scale");
  return kDegreeNames[static_cast<std::size_t>(rank - 1)];
}

std::optional<int> degree_rank(std::string_view name) {
  for (std::size_t i = 0; i < kDegreeNames.size(); ++i) {
    if (iequals(kDegreeNames[i], name)) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::string Qualification::label() const {
  if (scale.kind() == ScaleKind::OrdinalDegree) return name + " degree [in " + field + "]";
  return name + " experience [years]";
}

const std::vector<Job>& builtin_jobs() {
  static const std::vector<Job> jobs = {
      {"Full-stack developer", years("frontend development"), years("backend development"),
       {"male dominated", "white collar"}},
      {"Welder", years("Metal inert gas (MIG) welding"), years("Tungsten inert gas (TIG) welding"),
       {"male dominated", "blue collar"}},
      {"Mechanical engineer", degree("engineering education", "Mechanical Engineering"),
       years("Computer-Aided Design (CAD)"), {"male dominated", "white collar"}},
      {"Social Psychologist", degree("psychology education", "Social Psychology"), years("counseling"),
       {"female dominated", "white collar"}},
      {"House cleaner", years("residential cleaning"), years("special event cleaning"),
       {"female dominated", "blue collar"}},
      {"Nurse", years("clinical decision-making"), years("patient care"),
       {"female dominated", "blue collar", "white collar"}},
  };
  return jobs;
}

const Job& find_job(std::string_view title) {
  for (const auto& job : builtin_jobs()) {
    if (iequals(job.title, title)) return job;
  }
  throw UsageError("unknown job '" + std::string(title) + "'");
}

bool on_scales(const Job& job, Point p) {
  return job.first.scale.contains(p.q1) && job.second.scale.contains(p.q2);
}

void require_on_scales(const Job& job, Point p) {
  if (!on_scales(job, p)) {
    throw DomainError("point (" + std::to_string(p.q1) + ", " + std::to_string(p.q2) +
                      ") is off the scales of job '" + job.title + "'");
  }
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Target: return "target";
    case Role::Competitor: return "competitor";
    case Role::Decoy: return "decoy";
  }
  return "?";
}

std::string_view to_string(Pronoun pronoun) {
  switch (pronoun) {
    case Pronoun::Their: return "their";
    case Pronoun::His: return "his";
    case Pronoun::Her: return "her";
  }
  return "?";
}

std::string_view to_string(Condition condition) {
  return condition == Condition::Control ? "control" : "treatment";
}

Pronoun parse_pronoun(std::string_view text) {
  if (iequals(text, "their")) return Pronoun::Their;
  if (iequals(text, "his")) return Pronoun::His;
  if (iequals(text, "her")) return Pronoun::Her;
  throw UsageError("unknown pronoun '" + std::string(text) + "'");
}

Condition parse_condition(std::string_view text) {
  if (iequals(text, "control")) return Condition::Control;
  if (iequals(text, "treatment")) return Condition::Treatment;
  throw UsageError("unknown condition '" + std::string(text) + "'");
}

Pronoun PronounScheme::of(Role role) const {
  switch (role) {
    case Role::Target: return target;
    case Role::Competitor: return competitor;
    case Role::Decoy: return decoy;
  }
  return Pronoun::Their;
}

std::string_view to_string(DecoyRegion region) {
  switch (region) {
    case DecoyRegion::AsdByTarget: return "asd_by_target";
    case DecoyRegion::AsdByCompetitor: return "asd_by_competitor";
    case DecoyRegion::SdByBoth: return "sd_by_both";
    case DecoyRegion::PhantomAsdOfTarget: return "phantom_asd_of_target";
    case DecoyRegion::PhantomAsdOfCompetitor: return "phantom_asd_of_competitor";
    case DecoyRegion::PhantomSdOfBoth: return "phantom_sd_of_both";
    case DecoyRegion::NonDominated: return "non_dominated";
    case DecoyRegion::OnAlternative: return "on_alternative";
  }
  return "?";
}

bool is_phantom(DecoyRegion region) {
  return region == DecoyRegion::PhantomAsdOfTarget || region == DecoyRegion::PhantomAsdOfCompetitor ||
         region == DecoyRegion::PhantomSdOfBoth;
}

std::string_view to_string(PhantomRule rule) {
  return rule == PhantomRule::Dominance ? "dominance" : "half_plane";
}

PhantomRule parse_phantom_rule(std::string_view text) {
  if (iequals(text, "dominance")) return PhantomRule::Dominance;
  if (iequals(text, "half_plane") || iequals(text, "half-plane")) return PhantomRule::HalfPlane;
  throw UsageError("unknown phantom rule '" + std::string(text) + "'");
}

DecoyRegion classify_point(Point target, Point competitor, Point decoy) {
  if (decoy == target || decoy == competitor) return DecoyRegion::OnAlternative;

  const bool over_target = dominates(decoy, target);
  const bool over_competitor = dominates(decoy, competitor);
  if (over_target && over_competitor) return DecoyRegion::PhantomSdOfBoth;
  if (over_target) return DecoyRegion::PhantomAsdOfTarget;
  if (over_competitor) return DecoyRegion::PhantomAsdOfCompetitor;

  const bool by_target = dominates(target, decoy);
  const bool by_competitor = dominates(competitor, decoy);
  if (by_target && by_competitor) return DecoyRegion::SdByBoth;
  if (by_target) return DecoyRegion::AsdByTarget;
  if (by_competitor) return DecoyRegion::AsdByCompetitor;
  return DecoyRegion::NonDominated;
}

DecoyRegion classify_decoy(const Job& job, const Candidate& target, const Candidate& competitor,
                           Point decoy) {
  require_on_scales(job, target.qualifications);
  require_on_scales(job, competitor.qualifications);
  require_on_scales(job, decoy);
  const Point t = target.qualifications;
  const Point c = competitor.qualifications;
  if (t == c || dominates(t, c) || dominates(c, t)) {
    throw DomainError("target and competitor must not dominate each other");
  }
  return classify_point(t, c, decoy);
}

namespace {

// Strictly beyond the line through target and competitor, on the side away from the origin.
bool beyond_tradeoff_line(Point t, Point c, Point p) {
  long nx = static_cast<long>(t.q2) - c.q2;
  long ny = static_cast<long>(c.q1) - t.q1;
  if (nx + ny < 0) {
    nx = -nx;
    ny = -ny;
  }
  return nx * (p.q1 - t.q1) + ny * (p.q2 - t.q2) > 0;
}

}  // namespace

std::vector<GridPoint> decoy_grid(const Job& job, const Candidate& target, const Candidate& competitor,
                                  PhantomRule rule) {
  const bool half_plane = rule == PhantomRule::HalfPlane && !job.is_ordinal();
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<std::size_t>(job.first.scale.size() * job.second.scale.size()));
  for (int q1 = job.first.scale.min_level(); q1 <= job.first.scale.max_level(); ++q1) {
    for (int q2 = job.second.scale.min_level(); q2 <= job.second.scale.max_level(); ++q2) {
      const Point p{q1, q2};
      const DecoyRegion region = classify_decoy(job, target, competitor, p);
      if (region == DecoyRegion::OnAlternative) continue;
      const bool phantom = half_plane
                               ? beyond_tradeoff_line(target.qualifications, competitor.qualifications, p)
                               : is_phantom(region);
      grid.push_back({p, region, !phantom});
    }
  }
  return grid;
}

ChoiceSet ChoiceSet::make(Job job, Condition condition, std::vector<Candidate> candidates) {
  const std::size_t expected = condition == Condition::Control ? 2 : 3;
  int counts[3] = {0, 0, 0};
  for (const auto& c : candidates) counts[static_cast<int>(c.role)]++;
  if (condition == Condition::Control && counts[static_cast<int>(Role::Decoy)] > 0) {
    throw UsageError("a control choice set cannot contain a decoy");
  }
  if (candidates.size() != expected || counts[0] != 1 || counts[1] != 1 ||
      (condition == Condition::Treatment && counts[2] != 1)) {
    throw UsageError(std::string(to_string(condition)) + " choice set needs exactly " +
                     std::to_string(expected) + " candidates with distinct roles");
  }
  for (const auto& c : candidates) {
    require_on_scales(job, c.qualifications);
    if (!c.has_permit && c.role != Role::Decoy) {
      throw UsageError("only a decoy may lack a work permit");
    }
  }
  ChoiceSet set(std::move(job), condition, std::move(candidates));
  const Point t = set.candidate(Role::Target).qualifications;
  const Point c = set.candidate(Role::Competitor).qualifications;
  if (t == c || dominates(t, c) || dominates(c, t)) {
    throw DomainError("target and competitor must each be superior on one attribute");
  }
  return set;
}

bool ChoiceSet::has(Role role) const {
  return std::any_of(candidates_.begin(), candidates_.end(), [role](const Candidate& c) { return c.role == role; });
}

const Candidate& ChoiceSet::candidate(Role role) const {
  for (const auto& c : candidates_) {
    if (c.role == role) return c;
  }
  throw UsageError("choice set has no " + std::string(to_string(role)));
}

BaselinePositions baseline_positions(const Job& job) {
  const bool ordinal_first = job.first.scale.kind() == ScaleKind::OrdinalDegree;
  const bool ordinal_second = job.second.scale.kind() == ScaleKind::OrdinalDegree;
  if (ordinal_second && !ordinal_first) {
    throw UsageError("jobs with an ordinal second qualification have no baseline positions");
  }
  if (ordinal_first && ordinal_second) {
    throw UsageError("jobs with two ordinal qualifications have no baseline positions");
  }
  if (ordinal_first) {
    return {{static_cast<int>(Degree::PhD), 3},
            {static_cast<int>(Degree::Bachelor), 6},
            {static_cast<int>(Degree::Master), 2}};
  }
  return {{3, 6}, {6, 3}, {2, 5}};
}

ChoiceSet baseline_choice_set(const Job& job, Condition condition, PronounScheme pronouns) {
  const BaselinePositions pos = baseline_positions(job);
  std::vector<Candidate> candidates = {
      {Role::Target, pos.target, pronouns.target, true},
      {Role::Competitor, pos.competitor, pronouns.competitor, true},
  };
  if (condition == Condition::Treatment) candidates.push_back({Role::Decoy, pos.decoy, pronouns.decoy, true});
  return ChoiceSet::make(job, condition, std::move(candidates));
}

ChoiceSet choice_set_with_decoy(const Job& job, Point point, bool has_permit, PronounScheme pronouns) {
  const BaselinePositions pos = baseline_positions(job);
  return ChoiceSet::make(job, Condition::Treatment,
                         {{Role::Target, pos.target, pronouns.target, true},
                          {Role::Competitor, pos.competitor, pronouns.competitor, true},
                          {Role::Decoy, point, pronouns.decoy, has_permit}});
}

}  // namespace decoylab
