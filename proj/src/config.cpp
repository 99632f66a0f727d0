#include "decoylab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "decoylab/errors.hpp"
#include "decoylab/remote.hpp"

namespace decoylab {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CrossProfession: return "cross_profession";
    case ExperimentKind::DecoySpaceSweep: return "decoy_space_sweep";
    case ExperimentKind::GenderDecoys: return "gender_decoys";
    case ExperimentKind::WarningRobustness: return "warning_robustness";
    case ExperimentKind::RoleRobustness: return "role_robustness";
    case ExperimentKind::Custom: return "custom";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::CrossProfession, ExperimentKind::DecoySpaceSweep, ExperimentKind::GenderDecoys,
                 ExperimentKind::WarningRobustness, ExperimentKind::RoleRobustness, ExperimentKind::Custom}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(text) + "'");
}

const std::map<std::string, BackendSpec>& builtin_backends() {
  static const std::map<std::string, BackendSpec> backends = {
      {"rational", {"rational", AgentKind{RationalEqualWeights{}}}},
      {"noisy-rational", {"noisy-rational", AgentKind{NoisyRational{}}}},
      {"decoy-kernel", {"decoy-kernel", AgentKind{DecoyKernel{}}}},
      {"position-biased", {"position-biased", AgentKind{PositionBiased{}}}},
  };
  return backends;
}

namespace {

// Field access that records which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& value, std::string where) : value_(value), where_(std::move(where)) {
    if (!value_.is_object()) throw ConfigError(where_ + " must be an object");
  }
  ~Section() = default;

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(path(key) + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(path(key) + " must be a string");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(path(key) + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
            throw ConfigError(path(key) + " must not be negative");
          }
        }
      } else {
        if (!v->is_number()) throw ConfigError(path(key) + " must be a number");
      }
      return v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  template <typename T>
  T req(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError("missing " + path(key));
    return *v;
  }

  void finish() const {
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + path(it.key()));
    }
  }

 private:
  const json& value_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto parse_enum(Fn fn, const std::string& text, const std::string& where) {
  try {
    return fn(text);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

AgentKind parse_agent(Section& s) {
  const auto agent = s.req<std::string>("agent");
  if (agent == "rational") return RationalEqualWeights{};
  if (agent == "noisy_rational") {
    NoisyRational a;
    a.sharpness = s.opt<double>("sharpness").value_or(a.sharpness);
    return a;
  }
  if (agent == "decoy_kernel") {
    DecoyKernel a;
    a.strength = s.opt<double>("strength").value_or(a.strength);
    a.sharpness = s.opt<double>("sharpness").value_or(a.sharpness);
    return a;
  }
  if (agent == "position_biased") {
    PositionBiased a;
    if (const json* w = s.get("weights")) {
      if (!w->is_array() || w->size() != 3) throw ConfigError(s.path("weights") + " must list three numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*w)[i].is_number()) throw ConfigError(s.path("weights") + " must list three numbers");
        a.weights[i] = (*w)[i].get<double>();
      }
    }
    return a;
  }
  throw ConfigError(s.path("agent") + ": unknown agent '" + agent + "'");
}

BackendSpec parse_backend(const std::string& name, const json& value) {
  Section s(value, "backends." + name);
  const auto kind = s.req<std::string>("kind");
  BackendSpec spec{name, AgentKind{}};
  if (kind == "simulated") {
    spec.kind = parse_agent(s);
  } else if (kind == "remote") {
    if (value.contains("api_key")) {
      throw ConfigError(s.path("api_key") +
                        " is not allowed: name an environment variable with api_key_env instead");
    }
    RemoteBackendSpec r;
    r.endpoint = s.req<std::string>("endpoint");
    r.path = s.opt<std::string>("path").value_or(r.path);
    r.model = s.req<std::string>("model");
    r.api_key_env = s.req<std::string>("api_key_env");
    r.max_retries = s.opt<int>("max_retries").value_or(r.max_retries);
    r.initial_backoff_ms = s.opt<int>("initial_backoff_ms").value_or(r.initial_backoff_ms);
    r.max_backoff_ms = s.opt<int>("max_backoff_ms").value_or(r.max_backoff_ms);
    r.timeout_s = s.opt<int>("timeout_s").value_or(r.timeout_s);
    if (r.endpoint.rfind("http://", 0) != 0 && r.endpoint.rfind("https://", 0) != 0) {
      throw ConfigError(s.path("endpoint") + " must start with http:// or https://");
    }
    if (r.api_key_env.empty()) throw ConfigError(s.path("api_key_env") + " must not be empty");
    if (r.max_retries < 0 || r.initial_backoff_ms < 0 || r.max_backoff_ms < r.initial_backoff_ms ||
        r.timeout_s <= 0) {
      throw ConfigError("backends." + name + ": retry settings out of range");
    }
    spec.kind = r;
  } else {
    throw ConfigError(s.path("kind") + " must be 'simulated' or 'remote'");
  }
  s.finish();
  return spec;
}

PronounScheme parse_pronouns(const json& value) {
  if (value.is_string()) {
    if (value.get<std::string>() == "neutral") return PronounScheme::neutral();
    throw ConfigError("pronouns must be \"neutral\" or an object");
  }
  Section s(value, "pronouns");
  PronounScheme p;
  auto one = [&](const char* key, Pronoun& out) {
    if (auto v = s.opt<std::string>(key)) out = parse_enum(parse_pronoun, *v, s.path(key));
  };
  one("target", p.target);
  one("competitor", p.competitor);
  one("decoy", p.decoy);
  s.finish();
  return p;
}

json agent_to_json(const AgentKind& kind) {
  return std::visit(
      [](const auto& a) -> json {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, RationalEqualWeights>) {
          return {{"kind", "simulated"}, {"agent", "rational"}};
        } else if constexpr (std::is_same_v<A, NoisyRational>) {
          return {{"kind", "simulated"}, {"agent", "noisy_rational"}, {"sharpness", a.sharpness}};
        } else if constexpr (std::is_same_v<A, DecoyKernel>) {
          return {{"kind", "simulated"}, {"agent", "decoy_kernel"}, {"strength", a.strength}, {"sharpness", a.sharpness}};
        } else {
          return {{"kind", "simulated"},
                  {"agent", "position_biased"},
                  {"weights", {a.weights[0], a.weights[1], a.weights[2]}}};
        }
      },
      kind);
}

json backend_to_json(const BackendSpec& spec) {
  if (spec.simulated()) return agent_to_json(std::get<AgentKind>(spec.kind));
  const auto& r = std::get<RemoteBackendSpec>(spec.kind);
  return {{"kind", "remote"},          {"endpoint", r.endpoint},
          {"path", r.path},            {"model", r.model},
          {"api_key_env", r.api_key_env}, {"max_retries", r.max_retries},
          {"initial_backoff_ms", r.initial_backoff_ms}, {"max_backoff_ms", r.max_backoff_ms},
          {"timeout_s", r.timeout_s}};
}

}  // namespace

std::vector<const Job*> ExperimentConfig::selected_jobs() const {
  std::vector<const Job*> out;
  if (jobs.empty()) {
    for (const auto& j : builtin_jobs()) out.push_back(&j);
    return out;
  }
  for (const auto& title : jobs) out.push_back(&find_job(title));
  return out;
}

const BackendSpec& ExperimentConfig::selected_backend() const {
  if (auto it = backends.find(backend); it != backends.end()) return it->second;
  if (auto it = builtin_backends().find(backend); it != builtin_backends().end()) return it->second;
  throw ConfigError("backend '" + backend + "' is neither declared nor built in");
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  std::set<std::string> seen;
  for (const auto& title : jobs) {
    try {
      if (!seen.insert(find_job(title).title).second) throw ConfigError("job '" + title + "' listed twice");
    } catch (const UsageError& e) {
      throw ConfigError(std::string("jobs: ") + e.what());
    }
  }
  const BackendSpec& spec = selected_backend();
  if (spec.simulated()) {
    try {
      AgentSpec{std::get<AgentKind>(spec.kind), seed}.validate();
    } catch (const UsageError& e) {
      throw ConfigError("backend '" + backend + "': " + e.what());
    }
  }
  try {
    decoding.capability().validate();
  } catch (const UsageError& e) {
    throw ConfigError(std::string("decoding: ") + e.what());
  }
  if (decoding.top_k > 1000) throw ConfigError("decoding.top_k must be at most 1000");
  if (decoding.samples < 1 || decoding.samples > 100000) throw ConfigError("decoding.samples must be in [1, 100000]");
  if (decoding.control_repeats < 1 || decoding.control_repeats > 100) {
    throw ConfigError("decoding.control_repeats must be in [1, 100]");
  }
  if (!std::isfinite(decoding.temperature) || decoding.temperature > 10.0) {
    throw ConfigError("decoding.temperature must be in (0, 10]");
  }
  if (concurrency < 1 || concurrency > 256) throw ConfigError("concurrency must be in [1, 256]");
  if (!(nominal_samples > 0.0) || !std::isfinite(nominal_samples)) {
    throw ConfigError("nominal_samples must be positive");
  }
  if (output.empty()) throw ConfigError("output must not be empty");

  const auto selected = selected_jobs();
  if (experiment == ExperimentKind::Custom) {
    if (decoy) {
      for (const Job* job : selected) {
        try {
          const auto pos = baseline_positions(*job);
          classify_decoy(*job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor}, *decoy);
          if (*decoy == pos.target || *decoy == pos.competitor) {
            throw ConfigError("decoy coincides with a listed candidate for " + job->title);
          }
        } catch (const DomainError& e) {
          throw ConfigError("decoy for " + job->title + ": " + e.what());
        }
      }
    }
  } else if (decoy || decoy_has_permit) {
    throw ConfigError("decoy is only accepted by custom experiments");
  }
  if (experiment == ExperimentKind::GenderDecoys) {
    if (pronouns) {
      const bool opposite = (pronouns->target == Pronoun::Her && pronouns->competitor == Pronoun::His) ||
                            (pronouns->target == Pronoun::His && pronouns->competitor == Pronoun::Her);
      if (!opposite) throw ConfigError("gender_decoys needs target and competitor of opposite genders");
    }
  }
  if ((experiment == ExperimentKind::GenderDecoys || experiment == ExperimentKind::WarningRobustness ||
       experiment == ExperimentKind::RoleRobustness) &&
      selected.size() < 2) {
    throw ConfigError(std::string(to_string(experiment)) + " needs at least two jobs for its test");
  }
}

ExperimentConfig parse_config(const json& document) {
  ExperimentConfig c;
  Section s(document, "");
  c.schema_version = s.req<int>("schema_version");
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported");
  }
  c.experiment = parse_experiment_kind(s.req<std::string>("experiment"));
  if (const json* jobs = s.get("jobs")) {
    if (!jobs->is_array()) throw ConfigError("jobs must be a list of job titles");
    for (const auto& j : *jobs) {
      if (!j.is_string()) throw ConfigError("jobs must be a list of job titles");
      c.jobs.push_back(j.get<std::string>());
    }
  }
  c.backend = s.opt<std::string>("backend").value_or(c.backend);
  if (const json* backends = s.get("backends")) {
    if (!backends->is_object()) throw ConfigError("backends must be an object");
    for (auto it = backends->begin(); it != backends->end(); ++it) {
      c.backends.emplace(it.key(), parse_backend(it.key(), it.value()));
    }
  }
  if (const json* d = s.get("decoding")) {
    Section ds(*d, "decoding");
    if (auto mode = ds.opt<std::string>("mode")) c.decoding.mode = parse_enum(parse_decoding_mode, *mode, "decoding.mode");
    c.decoding.top_k = ds.opt<int>("top_k").value_or(c.decoding.top_k);
    c.decoding.samples = ds.opt<std::size_t>("samples").value_or(c.decoding.samples);
    c.decoding.temperature = ds.opt<double>("temperature").value_or(c.decoding.temperature);
    c.decoding.control_repeats = ds.opt<std::size_t>("control_repeats").value_or(c.decoding.control_repeats);
    ds.finish();
  }
  if (auto v = s.opt<std::string>("phantom_rule")) c.phantom_rule = parse_enum(parse_phantom_rule, *v, "phantom_rule");
  if (auto v = s.opt<std::string>("role")) c.role = parse_enum(parse_role_variant, *v, "role");
  c.warning = s.opt<bool>("warning").value_or(c.warning);
  if (const json* p = s.get("pronouns")) c.pronouns = parse_pronouns(*p);
  if (const json* d = s.get("decoy")) {
    Section ds(*d, "decoy");
    c.decoy = Point{ds.req<int>("q1"), ds.req<int>("q2")};
    c.decoy_has_permit = ds.opt<bool>("has_permit");
    ds.finish();
  }
  c.output = s.opt<std::string>("output").value_or(c.output);
  c.seed = s.opt<std::uint64_t>("seed").value_or(c.seed);
  c.concurrency = s.opt<int>("concurrency").value_or(c.concurrency);
  c.nominal_samples = s.opt<double>("nominal_samples").value_or(c.nominal_samples);
  s.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json document;
  try {
    document = json::parse(buffer.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_config(document);
}

json config_to_json(const ExperimentConfig& c) {
  json out;
  out["schema_version"] = c.schema_version;
  out["experiment"] = std::string(to_string(c.experiment));
  out["jobs"] = json::array();
  for (const Job* job : c.selected_jobs()) out["jobs"].push_back(job->title);
  out["backend"] = c.backend;
  // The selected backend is always written out so the snapshot stands alone.
  out["backends"] = json::object();
  for (const auto& [name, spec] : c.backends) out["backends"][name] = backend_to_json(spec);
  out["backends"][c.backend] = backend_to_json(c.selected_backend());
  out["decoding"] = {{"mode", std::string(to_string(c.decoding.mode))},
                     {"top_k", c.decoding.top_k},
                     {"samples", c.decoding.samples},
                     {"temperature", c.decoding.temperature},
                     {"control_repeats", c.decoding.control_repeats}};
  out["phantom_rule"] = std::string(to_string(c.phantom_rule));
  out["role"] = std::string(to_string(c.role));
  out["warning"] = c.warning;
  if (c.pronouns) {
    out["pronouns"] = {{"target", std::string(to_string(c.pronouns->target))},
                       {"competitor", std::string(to_string(c.pronouns->competitor))},
                       {"decoy", std::string(to_string(c.pronouns->decoy))}};
  }
  if (c.decoy) {
    out["decoy"] = {{"q1", c.decoy->q1}, {"q2", c.decoy->q2}};
    if (c.decoy_has_permit) out["decoy"]["has_permit"] = *c.decoy_has_permit;
  }
  out["output"] = c.output;
  out["seed"] = c.seed;
  out["concurrency"] = c.concurrency;
  out["nominal_samples"] = c.nominal_samples;
  return out;
}

std::string backend_id(const BackendSpec& spec, std::uint64_t seed) {
  if (spec.simulated()) {
    return "simulated:" + AgentSpec{std::get<AgentKind>(spec.kind), seed}.describe() + ";seed=" + std::to_string(seed);
  }
  const auto& r = std::get<RemoteBackendSpec>(spec.kind);
  return "remote:" + r.endpoint + r.path + ":" + r.model;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const DecodingConfig& decoding, std::uint64_t seed) {
  if (spec.simulated()) {
    return std::make_unique<SimulatedBackend>(AgentSpec{std::get<AgentKind>(spec.kind), seed}, decoding.capability());
  }
  const auto& r = std::get<RemoteBackendSpec>(spec.kind);
  RemoteConfig rc;
  rc.endpoint = r.endpoint;
  rc.path = r.path;
  rc.model = r.model;
  rc.api_key_env = r.api_key_env;
  rc.capability = decoding.capability();
  rc.max_retries = r.max_retries;
  rc.initial_backoff = std::chrono::milliseconds(r.initial_backoff_ms);
  rc.max_backoff = std::chrono::milliseconds(r.max_backoff_ms);
  rc.timeout = std::chrono::seconds(r.timeout_s);
  auto transport = make_http_transport(rc.endpoint, rc.timeout);
  return std::make_unique<RemoteBackend>(std::move(rc), std::move(transport));
}

}  // namespace decoylab
