#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "decoylab/agents.hpp"
#include "decoylab/backend.hpp"
#include "decoylab/design.hpp"
#include "decoylab/prompt.hpp"
#include "json.hpp"

namespace decoylab {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { CrossProfession, DecoySpaceSweep, GenderDecoys, WarningRobustness, RoleRobustness, Custom };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

struct RemoteBackendSpec {
  std::string endpoint;
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key_env;
  int max_retries = 5;
  int initial_backoff_ms = 500;
  int max_backoff_ms = 16000;
  int timeout_s = 60;
};

struct BackendSpec {
  std::string name;
  std::variant<AgentKind, RemoteBackendSpec> kind;

  bool simulated() const { return kind.index() == 0; }
};

// Named simulated backends available without declaring them.
const std::map<std::string, BackendSpec>& builtin_backends();

struct DecodingConfig {
  DecodingMode mode = DecodingMode::TokenLogprobs;
  int top_k = 100;
  std::size_t samples = 100;  // per prompt, sampling mode
  double temperature = 1.0;
  std::size_t control_repeats = 3;  // control prompts draw samples * control_repeats

  BackendCapability capability() const { return {mode, top_k, temperature}; }
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ExperimentKind experiment = ExperimentKind::CrossProfession;
  std::vector<std::string> jobs;  // canonical titles; empty means all built-in jobs
  std::string backend = "rational";
  std::map<std::string, BackendSpec> backends;  // declared in the file
  DecodingConfig decoding;
  PhantomRule phantom_rule = PhantomRule::Dominance;
  RoleVariant role = RoleVariant::Concise1;
  bool warning = false;
  std::optional<PronounScheme> pronouns;
  std::optional<Point> decoy;  // custom experiments; baseline decoy when absent
  std::optional<bool> decoy_has_permit;  // default: phantom under phantom_rule loses it
  std::string output = "decoylab-run";
  std::uint64_t seed = 0;
  int concurrency = 1;
  double nominal_samples = 600;  // chi-square basis for exact backends

  std::vector<const Job*> selected_jobs() const;
  const BackendSpec& selected_backend() const;
  void validate() const;  // ConfigError
};

// Throws ConfigError on unknown keys, wrong types or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::json config_to_json(const ExperimentConfig& config);

std::string backend_id(const BackendSpec& spec, std::uint64_t seed);
std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const DecodingConfig& decoding, std::uint64_t seed);

}  // namespace decoylab
