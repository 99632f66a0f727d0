#pragma once

// Jobs, candidates and choice sets for two-attribute hiring experiments, and
// the geometry that places a decoy relative to the target and competitor.

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decoylab {

enum class ScaleKind { NumericalYears, OrdinalDegree };

// Degree ranks, used for ordering only.
enum class Degree { Certificate = 1, Bachelor = 2, Master = 3, PhD = 4, PostDoc = 5 };

class QualificationScale {
 public:
  constexpr explicit QualificationScale(ScaleKind kind) : kind_(kind) {}

  static constexpr QualificationScale years() { return QualificationScale(ScaleKind::NumericalYears); }
  static constexpr QualificationScale degree() { return QualificationScale(ScaleKind::OrdinalDegree); }

  constexpr ScaleKind kind() const { return kind_; }
  constexpr int min_level() const { return 1; }
  constexpr int max_level() const { return kind_ == ScaleKind::NumericalYears ? 8 : 5; }
  constexpr int size() const { return max_level() - min_level() + 1; }
  constexpr bool contains(int level) const { return level >= min_level() && level <= max_level(); }

  // "3 years" style or degree name; throws DomainError when off-scale.
  std::string describe(int level) const;

  constexpr bool operator==(const QualificationScale&) const = default;

 private:
  ScaleKind kind_;
};

std::string_view degree_name(int rank);
std::optional<int> degree_rank(std::string_view name);

struct Qualification {
  std::string name;  // e.g. "clinical decision-making"
  QualificationScale scale = QualificationScale::years();
  std::string field;  // ordinal qualifications only, e.g. "Mechanical Engineering"

  // Listing label in the form used by the built-in job table.
  std::string label() const;
};

struct Job {
  std::string title;
  Qualification first;
  Qualification second;
  std::vector<std::string> tags;  // gender dominance, collar type

  bool is_ordinal() const {
    return first.scale.kind() == ScaleKind::OrdinalDegree ||
           second.scale.kind() == ScaleKind::OrdinalDegree;
  }
};

const std::vector<Job>& builtin_jobs();
const Job& find_job(std::string_view title);  // case-insensitive; UsageError if unknown

// A position in the two-attribute space; ordinal attributes hold their rank.
struct Point {
  int q1 = 0;
  int q2 = 0;
  auto operator<=>(const Point&) const = default;
};

// >= in both attributes and > in at least one.
constexpr bool dominates(Point a, Point b) {
  return a.q1 >= b.q1 && a.q2 >= b.q2 && (a.q1 > b.q1 || a.q2 > b.q2);
}

bool on_scales(const Job& job, Point p);
void require_on_scales(const Job& job, Point p);  // DomainError

enum class Role { Target = 0, Competitor = 1, Decoy = 2 };
enum class Pronoun { Their, His, Her };
enum class Condition { Control, Treatment };

std::string_view to_string(Role role);
std::string_view to_string(Pronoun pronoun);
std::string_view to_string(Condition condition);
Pronoun parse_pronoun(std::string_view text);
Condition parse_condition(std::string_view text);

struct Candidate {
  Role role = Role::Target;
  Point qualifications;
  Pronoun pronoun = Pronoun::Their;
  bool has_permit = true;

  bool operator==(const Candidate&) const = default;
};

struct PronounScheme {
  Pronoun target = Pronoun::Their;
  Pronoun competitor = Pronoun::Their;
  Pronoun decoy = Pronoun::Their;

  static constexpr PronounScheme neutral() { return {}; }
  Pronoun of(Role role) const;
  bool operator==(const PronounScheme&) const = default;
};

enum class DecoyRegion {
  AsdByTarget,
  AsdByCompetitor,
  SdByBoth,
  PhantomAsdOfTarget,
  PhantomAsdOfCompetitor,
  PhantomSdOfBoth,
  NonDominated,
  OnAlternative,
};

inline constexpr DecoyRegion kAllRegions[] = {
    DecoyRegion::AsdByTarget,        DecoyRegion::AsdByCompetitor,
    DecoyRegion::SdByBoth,           DecoyRegion::PhantomAsdOfTarget,
    DecoyRegion::PhantomAsdOfCompetitor, DecoyRegion::PhantomSdOfBoth,
    DecoyRegion::NonDominated,       DecoyRegion::OnAlternative,
};

std::string_view to_string(DecoyRegion region);
bool is_phantom(DecoyRegion region);

// Which decoys lose their work permit in a sweep.
enum class PhantomRule {
  Dominance,  // decoy dominates the target and/or the competitor
  HalfPlane,  // numerical grids: beyond the target-competitor line
};

std::string_view to_string(PhantomRule rule);
PhantomRule parse_phantom_rule(std::string_view text);

// Pure geometry; assumes target and competitor are mutually non-dominated.
DecoyRegion classify_point(Point target, Point competitor, Point decoy);

// Validates scales and the target/competitor precondition, then classifies.
DecoyRegion classify_decoy(const Job& job, const Candidate& target, const Candidate& competitor,
                           Point decoy);

struct GridPoint {
  Point point;
  DecoyRegion region = DecoyRegion::NonDominated;
  bool has_permit = true;

  bool operator==(const GridPoint&) const = default;
};

// Every scale point except the two occupied by target and competitor, q1-major order.
std::vector<GridPoint> decoy_grid(const Job& job, const Candidate& target, const Candidate& competitor,
                                  PhantomRule rule = PhantomRule::Dominance);

class ChoiceSet {
 public:
  // Control takes {target, competitor}; treatment adds exactly one decoy.
  static ChoiceSet make(Job job, Condition condition, std::vector<Candidate> candidates);

  const Job& job() const { return job_; }
  Condition condition() const { return condition_; }
  std::span<const Candidate> candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }

  bool has(Role role) const;
  const Candidate& candidate(Role role) const;  // UsageError if absent

 private:
  ChoiceSet(Job job, Condition condition, std::vector<Candidate> candidates)
      : job_(std::move(job)), condition_(condition), candidates_(std::move(candidates)) {}

  Job job_;
  Condition condition_;
  std::vector<Candidate> candidates_;
};

struct BaselinePositions {
  Point target;
  Point competitor;
  Point decoy;
};

// Fixed positions shared by all jobs of the same attribute kind.
BaselinePositions baseline_positions(const Job& job);

ChoiceSet baseline_choice_set(const Job& job, Condition condition,
                              PronounScheme pronouns = PronounScheme::neutral());

// The baseline target/competitor pair plus a decoy at `point`.
ChoiceSet choice_set_with_decoy(const Job& job, Point point, bool has_permit,
                                PronounScheme pronouns = PronounScheme::neutral());

}  // namespace decoylab
