#pragma once

// Experiment plans, trial execution, run manifests, replay and audit.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "decoylab/analysis.hpp"
#include "decoylab/backend.hpp"
#include "decoylab/config.hpp"
#include "decoylab/prompt.hpp"
#include "json.hpp"

namespace decoylab {

std::string_view tool_version();

// One choice set under one prompt configuration, rendered in every permutation.
struct Arm {
  std::string job;
  std::string variant;
  Condition condition = Condition::Control;
  ChoiceSet choice_set;
  RoleVariant role = RoleVariant::Concise1;
  bool warning = false;
  std::vector<PromptBundle> prompts;  // indexed by permutation id
  std::vector<std::string> prompt_hashes;
  std::size_t samples_per_prompt = 1;
};

struct Comparison {
  std::size_t control = 0;  // arm indices
  std::size_t treatment = 0;
  std::string job;
  std::string variant;
  GridPoint decoy;
};

// Test across jobs: one row per job, one column per compared setting; each
// entry is a comparison index whose bias enters the test.
struct GroupTest {
  TestKind kind = TestKind::PairedT;
  std::string label;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::size_t>> rows;
};

struct ExperimentPlan {
  ExperimentConfig config;
  std::string backend_id;
  BackendCapability capability;
  std::vector<Arm> arms;
  std::vector<Comparison> comparisons;
  std::vector<GroupTest> group_tests;
  bool chi_square_per_comparison = false;
  bool maps = false;  // decoy-space sweep: one bias map per job

  std::size_t prompts() const;
  std::size_t requests() const;
};

ExperimentPlan build_plan(const ExperimentConfig& config, const std::string& backend_id);

struct TrialFailure {
  std::string scope;
  std::string key;  // empty when the failure is not tied to one request
  std::string message;

  bool operator==(const TrialFailure&) const = default;
};

struct ComparisonResult {
  std::optional<BiasResult> bias;
  std::string count_basis;  // "sampled", "nominal" or empty
  std::string verdict;
  std::string note;
};

struct GroupTestResult {
  std::optional<TestOutcome> outcome;
  std::size_t rows = 0;
  std::string note;
};

struct ExperimentResults {
  std::vector<std::optional<AggregatedCondition>> arms;
  std::vector<ComparisonResult> comparisons;
  std::vector<GroupTestResult> group_tests;
  std::vector<BiasMap> maps;
  std::vector<TrialFailure> failures;
  std::vector<std::string> trial_keys;  // plan order
};

struct ExecutionOptions {
  int concurrency = 1;
  bool strict = false;
  // Replay: requests that failed in the original run fail again with the same message.
  std::map<std::string, std::string> known_failures;
};

// Queries every request (cache-first), then aggregates in plan order. A
// ReplayError from the interrogator propagates; other per-request errors
// become failures, or a StrictModeError under `strict`.
ExperimentResults execute_plan(const ExperimentPlan& plan, Interrogator& interrogator,
                               const ExecutionOptions& options = {});

// Effect label for one comparison.
std::string verdict(const BiasResult& bias, bool sampled);

struct RunManifest {
  std::string tool_version;
  ExperimentConfig config;
  std::string backend_id;
  std::string capability;
  std::size_t planned_requests = 0;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> trial_keys;
  std::vector<TrialFailure> failures;
  nlohmann::json summary;
  std::map<std::string, std::string> report_hashes;  // relative path -> sha256

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& document);
};

RunManifest load_manifest(const std::filesystem::path& file);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& file);

struct RunOptions {
  bool strict = false;
  std::optional<int> concurrency;
  std::optional<std::filesystem::path> output;
  Backend* backend = nullptr;  // replaces the configured backend when set
};

struct RunOutcome {
  RunManifest manifest;
  ExperimentPlan plan;
  ExperimentResults results;
  std::filesystem::path output_dir;
};

// Writes reports/, maps/, cache.jsonl and manifest.json under the output directory.
RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct ReplayOutcome {
  std::map<std::string, std::string> report_hashes;
  bool matches_manifest = false;
  ExperimentResults results;
};

// Regenerates the reports from the manifest and cache alone. The cache
// defaults to cache.jsonl next to the manifest.
ReplayOutcome replay(const std::filesystem::path& manifest_file, const std::filesystem::path& output_dir,
                     std::optional<std::filesystem::path> cache_file = std::nullopt);

struct AuditReport {
  bool ok = false;
  std::size_t trials_checked = 0;
  std::vector<std::string> problems;
};

// Checks that every trial key resolves, re-decodes every record, and that a
// replay reproduces the recorded report bytes.
AuditReport audit(const std::filesystem::path& run_dir);

struct DryRunEstimate {
  std::size_t arms = 0;
  std::size_t prompts = 0;
  std::size_t requests = 0;
  std::size_t cached = 0;  // already in the output directory's cache
  std::string backend_id;
};

DryRunEstimate dry_run(const ExperimentConfig& config);

}  // namespace decoylab
