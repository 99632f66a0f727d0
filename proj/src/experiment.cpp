#include "decoylab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "decoylab/errors.hpp"
#include "decoylab/report.hpp"

#ifndef DECOYLAB_VERSION
#define DECOYLAB_VERSION "0.0.0"
#endif

namespace decoylab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view tool_version() { return DECOYLAB_VERSION; }

std::size_t ExperimentPlan::prompts() const {
  std::size_t n = 0;
  for (const auto& a : arms) n += a.prompts.size();
  return n;
}

std::size_t ExperimentPlan::requests() const {
  std::size_t n = 0;
  for (const auto& a : arms) n += a.prompts.size() * a.samples_per_prompt;
  return n;
}

namespace {

std::string point_label(Point p) { return "(" + std::to_string(p.q1) + "," + std::to_string(p.q2) + ")"; }

GridPoint decoy_of(const ChoiceSet& set) {
  const Candidate& d = set.candidate(Role::Decoy);
  const DecoyRegion region =
      classify_point(set.candidate(Role::Target).qualifications, set.candidate(Role::Competitor).qualifications,
                     d.qualifications);
  return {d.qualifications, region, d.has_permit};
}

class PlanBuilder {
 public:
  PlanBuilder(const ExperimentConfig& config, ExperimentPlan& plan)
      : config_(config), plan_(plan), sampled_(config.decoding.mode == DecodingMode::SampleOnly) {}

  std::size_t arm(const Job& job, std::string variant, ChoiceSet set, RoleVariant role, bool warning) {
    const Condition condition = set.condition();
    std::size_t samples = 1;
    if (sampled_) {
      samples = config_.decoding.samples * (condition == Condition::Control ? config_.decoding.control_repeats : 1);
    }
    Arm a{job.title, std::move(variant), condition, std::move(set), role, warning, {}, {}, samples};
    for (const auto& perm : enumerate_permutations(condition)) {
      a.prompts.push_back(render_prompt(a.choice_set, perm, role, warning));
      a.prompt_hashes.push_back(prompt_hash(a.prompts.back()));
    }
    plan_.arms.push_back(std::move(a));
    return plan_.arms.size() - 1;
  }

  std::size_t compare(std::size_t control, std::size_t treatment) {
    const Arm& t = plan_.arms[treatment];
    plan_.comparisons.push_back({control, treatment, t.job, t.variant, decoy_of(t.choice_set)});
    return plan_.comparisons.size() - 1;
  }

 private:
  const ExperimentConfig& config_;
  ExperimentPlan& plan_;
  bool sampled_;
};

}  // namespace

ExperimentPlan build_plan(const ExperimentConfig& config, const std::string& backend_id) {
  config.validate();
  ExperimentPlan plan{config, backend_id, config.decoding.capability(), {}, {}, {}, false, false};
  PlanBuilder b(config, plan);
  const auto jobs = config.selected_jobs();
  const PronounScheme pronouns = config.pronouns.value_or(PronounScheme::neutral());
  const RoleVariant role = config.role;
  const bool warning = config.warning;

  switch (config.experiment) {
    case ExperimentKind::CrossProfession:
      plan.chi_square_per_comparison = true;
      for (const Job* job : jobs) {
        const auto c = b.arm(*job, "baseline", baseline_choice_set(*job, Condition::Control, pronouns), role, warning);
        const auto t =
            b.arm(*job, "baseline", baseline_choice_set(*job, Condition::Treatment, pronouns), role, warning);
        b.compare(c, t);
      }
      break;

    case ExperimentKind::Custom:
      plan.chi_square_per_comparison = true;
      for (const Job* job : jobs) {
        const auto pos = baseline_positions(*job);
        const Point point = config.decoy.value_or(pos.decoy);
        bool permit = true;
        if (config.decoy_has_permit) {
          permit = *config.decoy_has_permit;
        } else {
          for (const auto& g : decoy_grid(*job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor},
                                          config.phantom_rule)) {
            if (g.point == point) permit = g.has_permit;
          }
        }
        const std::string variant = "decoy=" + point_label(point);
        const auto c = b.arm(*job, variant, baseline_choice_set(*job, Condition::Control, pronouns), role, warning);
        const auto t = b.arm(*job, variant, choice_set_with_decoy(*job, point, permit, pronouns), role, warning);
        b.compare(c, t);
      }
      break;

    case ExperimentKind::DecoySpaceSweep:
      plan.maps = true;
      for (const Job* job : jobs) {
        const auto pos = baseline_positions(*job);
        const auto c = b.arm(*job, "sweep", baseline_choice_set(*job, Condition::Control, pronouns), role, warning);
        for (const auto& g : decoy_grid(*job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor},
                                        config.phantom_rule)) {
          const auto t = b.arm(*job, "decoy=" + point_label(g.point),
                               choice_set_with_decoy(*job, g.point, g.has_permit, pronouns), role, warning);
          b.compare(c, t);
        }
      }
      break;

    case ExperimentKind::GenderDecoys: {
      std::vector<std::pair<Pronoun, Pronoun>> arrangements;
      if (config.pronouns) {
        arrangements.emplace_back(config.pronouns->target, config.pronouns->competitor);
      } else {
        arrangements = {{Pronoun::Her, Pronoun::His}, {Pronoun::His, Pronoun::Her}};
      }
      for (const auto& [target, competitor] : arrangements) {
        const std::string prefix = "target=" + std::string(to_string(target));
        GroupTest test{TestKind::PairedT, prefix + ": decoy her vs his", {"decoy=her", "decoy=his"}, {}, {}};
        for (const Job* job : jobs) {
          const PronounScheme base{target, competitor, Pronoun::Their};
          const auto c = b.arm(*job, prefix, baseline_choice_set(*job, Condition::Control, base), role, warning);
          std::vector<std::size_t> row;
          for (Pronoun decoy : {Pronoun::Her, Pronoun::His}) {
            const PronounScheme scheme{target, competitor, decoy};
            const auto t = b.arm(*job, prefix + ";decoy=" + std::string(to_string(decoy)),
                                 baseline_choice_set(*job, Condition::Treatment, scheme), role, warning);
            row.push_back(b.compare(c, t));
          }
          test.row_labels.push_back(job->title);
          test.rows.push_back(std::move(row));
        }
        plan.group_tests.push_back(std::move(test));
      }
      break;
    }

    case ExperimentKind::WarningRobustness: {
      GroupTest test{TestKind::PairedT, "warning absent vs present", {"warning=off", "warning=on"}, {}, {}};
      for (const Job* job : jobs) {
        std::vector<std::size_t> row;
        for (bool w : {false, true}) {
          const std::string variant = w ? "warning=on" : "warning=off";
          const auto c = b.arm(*job, variant, baseline_choice_set(*job, Condition::Control, pronouns), role, w);
          const auto t = b.arm(*job, variant, baseline_choice_set(*job, Condition::Treatment, pronouns), role, w);
          row.push_back(b.compare(c, t));
        }
        test.row_labels.push_back(job->title);
        test.rows.push_back(std::move(row));
      }
      plan.group_tests.push_back(std::move(test));
      break;
    }

    case ExperimentKind::RoleRobustness: {
      GroupTest test{TestKind::RmAnova, "role variants", {}, {}, {}};
      for (RoleVariant v : kAllRoleVariants) test.columns.push_back("role=" + std::string(to_string(v)));
      for (const Job* job : jobs) {
        std::vector<std::size_t> row;
        for (RoleVariant v : kAllRoleVariants) {
          const std::string variant = "role=" + std::string(to_string(v));
          const auto c = b.arm(*job, variant, baseline_choice_set(*job, Condition::Control, pronouns), v, warning);
          const auto t = b.arm(*job, variant, baseline_choice_set(*job, Condition::Treatment, pronouns), v, warning);
          row.push_back(b.compare(c, t));
        }
        test.row_labels.push_back(job->title);
        test.rows.push_back(std::move(row));
      }
      plan.group_tests.push_back(std::move(test));
      break;
    }
  }
  return plan;
}

std::string verdict(const BiasResult& bias, bool sampled) {
  if (sampled && bias.test) {
    if (!bias.test->significant) return "no attraction effect";
    return bias.bias > 0.0 ? "attraction effect" : "reverse effect";
  }
  if (std::abs(bias.bias) <= 1e-9) return "no attraction effect";
  return bias.bias > 0.0 ? "attraction effect" : "reverse effect";
}

namespace {

struct Slot {
  std::size_t arm;
  std::size_t permutation;
  std::size_t sample;
};

std::string scope_of(const Arm& arm) {
  return arm.job + "/" + arm.variant + "/" + std::string(to_string(arm.condition));
}

void run_group_test(const GroupTest& test, const ExperimentResults& results, GroupTestResult& out) {
  out.rows = test.rows.size();
  std::vector<std::vector<double>> data;
  for (std::size_t r = 0; r < test.rows.size(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < test.rows[r].size(); ++c) {
      const auto& cmp = results.comparisons[test.rows[r][c]];
      if (!cmp.bias) {
        out.note = "incomplete: no bias for " + test.row_labels[r] + " " + test.columns[c];
        return;
      }
      row.push_back(cmp.bias->bias);
    }
    data.push_back(std::move(row));
  }
  try {
    if (test.kind == TestKind::PairedT) {
      std::vector<double> x, y;
      for (const auto& row : data) {
        x.push_back(row[0]);
        y.push_back(row[1]);
      }
      out.outcome = paired_t_test(x, y);
    } else {
      out.outcome = rm_anova(data);
    }
  } catch (const DegenerateError& e) {
    out.note = std::string("degenerate: ") + e.what();
  } catch (const UsageError& e) {
    out.note = e.what();
  }
}

}  // namespace

ExperimentResults execute_plan(const ExperimentPlan& plan, Interrogator& interrogator,
                               const ExecutionOptions& options) {
  if (interrogator.backend_id() != plan.backend_id || !(interrogator.capability() == plan.capability)) {
    throw UsageError("interrogator does not match the plan's backend");
  }
  const bool sampled = plan.capability.mode == DecodingMode::SampleOnly;

  std::vector<Slot> slots;
  std::vector<std::string> keys;
  slots.reserve(plan.requests());
  keys.reserve(plan.requests());
  for (std::size_t a = 0; a < plan.arms.size(); ++a) {
    const Arm& arm = plan.arms[a];
    for (std::size_t p = 0; p < arm.prompts.size(); ++p) {
      for (std::size_t s = 0; s < arm.samples_per_prompt; ++s) {
        slots.push_back({a, p, s});
        keys.push_back(cache_key(plan.backend_id, arm.prompt_hashes[p], plan.capability, s));
      }
    }
  }

  std::vector<std::optional<TrialRecord>> records(slots.size());
  std::vector<std::string> errors(slots.size());
  std::vector<std::exception_ptr> replay_errors(slots.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= slots.size() || stop.load()) return;
      if (auto it = options.known_failures.find(keys[i]); it != options.known_failures.end()) {
        errors[i] = it->second;
        continue;
      }
      const Arm& arm = plan.arms[slots[i].arm];
      try {
        records[i] = interrogator.query(arm.prompts[slots[i].permutation], arm.prompt_hashes[slots[i].permutation],
                                        arm.choice_set, slots[i].sample);
      } catch (const ReplayError&) {
        replay_errors[i] = std::current_exception();
        stop.store(true);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
        if (options.strict) stop.store(true);
      }
    }
  };
  const std::size_t threads =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.concurrency)), 1, std::max<std::size_t>(1, slots.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : replay_errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResults out;
  out.trial_keys = keys;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (errors[i].empty()) continue;
    const Arm& arm = plan.arms[slots[i].arm];
    out.failures.push_back({scope_of(arm) + "/permutation " + std::to_string(slots[i].permutation) + "/sample " +
                                std::to_string(slots[i].sample),
                            keys[i], errors[i]});
  }
  if (options.strict && !out.failures.empty()) {
    throw StrictModeError("trial failed: " + out.failures.front().scope + ": " + out.failures.front().message);
  }

  // Aggregation, in plan order.
  std::size_t cursor = 0;
  for (const Arm& arm : plan.arms) {
    std::vector<PermutationResult> perms;
    for (std::size_t p = 0; p < arm.prompts.size(); ++p) {
      std::vector<TrialRecord> ok;
      for (std::size_t s = 0; s < arm.samples_per_prompt; ++s, ++cursor) {
        if (records[cursor]) ok.push_back(std::move(*records[cursor]));
      }
      if (ok.empty()) continue;
      try {
        const auto options_dist = assemble(plan.capability, ok, arm.prompts[p].identifiers);
        perms.push_back({static_cast<int>(p), to_roles(options_dist, arm.prompts[p].permutation)});
      } catch (const DecodeError& e) {
        out.failures.push_back({scope_of(arm) + "/permutation " + std::to_string(p), "", e.what()});
      }
    }
    try {
      out.arms.push_back(
          aggregate_permutations({arm.job, plan.backend_id, arm.variant, arm.condition}, std::move(perms)));
    } catch (const IncompleteDataError&) {
      out.arms.push_back(std::nullopt);
    }
  }
  if (options.strict && !out.failures.empty()) {
    throw StrictModeError("trial failed: " + out.failures.front().scope + ": " + out.failures.front().message);
  }

  for (const Comparison& cmp : plan.comparisons) {
    ComparisonResult r;
    const auto& control = out.arms[cmp.control];
    const auto& treatment = out.arms[cmp.treatment];
    if (!control || !treatment) {
      r.note = "incomplete";
      out.comparisons.push_back(std::move(r));
      continue;
    }
    AggregatedCondition matched = *control;
    matched.key.variant = treatment->key.variant;
    BiasResult bias = compute_bias(matched, *treatment);
    TargetCounts c_counts, t_counts;
    if (bias.control_counts && bias.treatment_counts) {
      r.count_basis = "sampled";
      c_counts = *bias.control_counts;
      t_counts = *bias.treatment_counts;
    } else {
      r.count_basis = "nominal";
      c_counts = nominal_counts(control->mean, plan.config.nominal_samples);
      t_counts = nominal_counts(treatment->mean, plan.config.nominal_samples);
    }
    try {
      bias.test = chi_square_target(c_counts, t_counts);
    } catch (const DegenerateError& e) {
      r.note = std::string("degenerate: ") + e.what();
    }
    r.verdict = verdict(bias, sampled);
    r.bias = std::move(bias);
    out.comparisons.push_back(std::move(r));
  }

  for (const GroupTest& test : plan.group_tests) {
    GroupTestResult r;
    run_group_test(test, out, r);
    out.group_tests.push_back(std::move(r));
  }

  if (plan.maps) {
    for (const Job* job : plan.config.selected_jobs()) {
      std::vector<std::pair<Point, BiasResult>> cells;
      for (std::size_t i = 0; i < plan.comparisons.size(); ++i) {
        if (plan.comparisons[i].job != job->title || !out.comparisons[i].bias) continue;
        cells.emplace_back(plan.comparisons[i].decoy.point, *out.comparisons[i].bias);
      }
      try {
        out.maps.push_back(build_bias_map(*job, plan.backend_id, plan.config.phantom_rule, cells));
      } catch (const IncompleteDataError& e) {
        out.failures.push_back({job->title + "/sweep", "", e.what()});
      }
    }
  }
  return out;
}

// ---- manifest ----

namespace {

json summary_of(const ExperimentPlan& plan, const ExperimentResults& results) {
  json s;
  s["comparisons"] = json::array();
  for (std::size_t i = 0; i < plan.comparisons.size(); ++i) {
    const auto& cmp = plan.comparisons[i];
    const auto& r = results.comparisons[i];
    json row = {{"job", cmp.job}, {"variant", cmp.variant}};
    if (r.bias) {
      row["p_target_control"] = r.bias->p_target_control;
      row["p_target_treatment"] = r.bias->p_target_treatment;
      row["bias"] = r.bias->bias;
      row["verdict"] = r.verdict;
      if (r.bias->test) row["chi_square_p"] = r.bias->test->p_value;
    } else {
      row["note"] = r.note;
    }
    s["comparisons"].push_back(std::move(row));
  }
  s["tests"] = json::array();
  for (std::size_t i = 0; i < plan.group_tests.size(); ++i) {
    const auto& r = results.group_tests[i];
    json row = {{"label", plan.group_tests[i].label}, {"kind", std::string(to_string(plan.group_tests[i].kind))}};
    if (r.outcome) {
      row["statistic"] = r.outcome->statistic;
      row["df"] = r.outcome->df;
      row["p_value"] = r.outcome->p_value;
    } else {
      row["note"] = r.note;
    }
    s["tests"].push_back(std::move(row));
  }
  s["failures"] = results.failures.size();
  return s;
}

void clean_outputs(const fs::path& dir) {
  for (const auto& [sub, ext] : {std::pair{"reports", ".csv"}, std::pair{"maps", ".svg"}}) {
    const fs::path d = dir / sub;
    if (!fs::is_directory(d)) continue;
    for (const auto& entry : fs::directory_iterator(d)) {
      if (entry.is_regular_file() && entry.path().extension() == ext) fs::remove(entry.path());
    }
  }
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

json RunManifest::to_json() const {
  json m;
  m["tool"] = "decoylab";
  m["tool_version"] = tool_version;
  m["config"] = config_to_json(config);
  m["backend_id"] = backend_id;
  m["capability"] = capability;
  m["design"] = {{"control_permutations", 2},
                 {"treatment_permutations", 6},
                 {"control_repeats", config.decoding.mode == DecodingMode::SampleOnly
                                         ? config.decoding.control_repeats
                                         : std::size_t{1}},
                 {"aggregation", config.decoding.mode == DecodingMode::SampleOnly ? "pooled_counts"
                                                                                 : "mean_of_distributions"}};
  m["requests"] = {{"planned", planned_requests}, {"backend_calls", backend_calls}, {"cache_hits", cache_hits}};
  m["wall_clock_seconds"] = wall_clock_seconds;
  m["trial_keys"] = trial_keys;
  m["failures"] = json::array();
  for (const auto& f : failures) m["failures"].push_back({{"scope", f.scope}, {"key", f.key}, {"message", f.message}});
  m["summary"] = summary;
  m["reports"] = report_hashes;
  return m;
}

RunManifest RunManifest::from_json(const json& d) {
  try {
    RunManifest m;
    m.tool_version = d.at("tool_version").get<std::string>();
    m.config = parse_config(d.at("config"));
    m.backend_id = d.at("backend_id").get<std::string>();
    m.capability = d.at("capability").get<std::string>();
    const auto& req = d.at("requests");
    m.planned_requests = req.at("planned").get<std::size_t>();
    m.backend_calls = req.at("backend_calls").get<std::size_t>();
    m.cache_hits = req.at("cache_hits").get<std::size_t>();
    m.wall_clock_seconds = d.at("wall_clock_seconds").get<double>();
    m.trial_keys = d.at("trial_keys").get<std::vector<std::string>>();
    for (const auto& f : d.at("failures")) {
      m.failures.push_back(
          {f.at("scope").get<std::string>(), f.at("key").get<std::string>(), f.at("message").get<std::string>()});
    }
    m.summary = d.at("summary");
    m.report_hashes = d.at("reports").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest load_manifest(const fs::path& file) {
  json d;
  try {
    d = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return RunManifest::from_json(d);
}

void save_manifest(const RunManifest& manifest, const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << manifest.to_json().dump(2) << '\n';
}

RunOutcome run_experiment(const ExperimentConfig& input, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = input;
  if (options.concurrency) config.concurrency = *options.concurrency;
  if (options.output) config.output = options.output->string();
  config.validate();

  std::unique_ptr<Backend> owned;
  Backend* backend = options.backend;
  if (backend == nullptr) {
    owned = make_backend(config.selected_backend(), config.decoding, config.seed);
    backend = owned.get();
  }
  if (!(backend->capability() == config.decoding.capability())) {
    throw UsageError("backend capability differs from the configured decoding parameters");
  }

  const fs::path dir = config.output;
  fs::create_directories(dir);
  ExperimentPlan plan = build_plan(config, backend->id());
  ResponseCache cache(dir / "cache.jsonl");
  Interrogator interrogator(plan.backend_id, plan.capability, backend, cache);
  ExperimentResults results = execute_plan(plan, interrogator, {config.concurrency, options.strict, {}});

  clean_outputs(dir);
  RunManifest m;
  m.report_hashes = write_reports(render_reports(plan, results), dir);
  m.tool_version = std::string(tool_version());
  m.config = config;
  m.backend_id = plan.backend_id;
  m.capability = plan.capability.canonical();
  m.planned_requests = plan.requests();
  m.backend_calls = interrogator.backend_calls();
  m.cache_hits = interrogator.cache_hits();
  m.trial_keys = results.trial_keys;
  m.failures = results.failures;
  m.summary = summary_of(plan, results);
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_manifest(m, dir / "manifest.json");
  return {std::move(m), std::move(plan), std::move(results), dir};
}

ReplayOutcome replay(const fs::path& manifest_file, const fs::path& output_dir,
                     std::optional<fs::path> cache_file) {
  const RunManifest m = load_manifest(manifest_file);
  const ExperimentPlan plan = build_plan(m.config, m.backend_id);
  if (plan.capability.canonical() != m.capability) {
    throw ConfigError("manifest capability does not match its configuration");
  }
  std::vector<std::string> keys;
  for (const auto& arm : plan.arms) {
    for (const auto& hash : arm.prompt_hashes) {
      for (std::size_t s = 0; s < arm.samples_per_prompt; ++s) keys.push_back(cache_key(plan.backend_id, hash, plan.capability, s));
    }
  }
  if (keys != m.trial_keys) {
    throw ConfigError("manifest trial keys do not match the prompts this version renders");
  }

  const fs::path cache_path = cache_file.value_or(manifest_file.parent_path() / "cache.jsonl");
  ResponseCache cache(cache_path, /*read_only=*/true);
  Interrogator interrogator(plan.backend_id, plan.capability, nullptr, cache);
  ExecutionOptions options;
  options.concurrency = 1;
  for (const auto& f : m.failures) {
    if (!f.key.empty()) options.known_failures.emplace(f.key, f.message);
  }
  ReplayOutcome out;
  out.results = execute_plan(plan, interrogator, options);

  fs::create_directories(output_dir);
  clean_outputs(output_dir);
  out.report_hashes = write_reports(render_reports(plan, out.results), output_dir);
  out.matches_manifest = out.report_hashes == m.report_hashes;
  return out;
}

AuditReport audit(const fs::path& run_dir) {
  AuditReport report;
  RunManifest m;
  try {
    m = load_manifest(run_dir / "manifest.json");
  } catch (const std::exception& e) {
    report.problems.push_back(e.what());
    return report;
  }

  const ResponseCache cache(run_dir / "cache.jsonl", /*read_only=*/true);
  std::set<std::string> failed;
  for (const auto& f : m.failures) {
    if (!f.key.empty()) failed.insert(f.key);
  }
  std::set<std::string> checked;
  for (const auto& key : m.trial_keys) {
    if (failed.count(key) || !checked.insert(key).second) continue;
    const auto record = cache.find(key);
    if (!record) {
      report.problems.push_back("missing cache record " + key);
      continue;
    }
    ++report.trials_checked;
    if (record->backend_id != m.backend_id) report.problems.push_back(key + ": backend id differs from manifest");
    if (record->capability.canonical() != m.capability) {
      report.problems.push_back(key + ": decoding parameters differ from manifest");
    }
    if (cache_key(record->backend_id, record->prompt_hash, record->capability, record->sample_index) != key) {
      report.problems.push_back(key + ": key does not match record contents");
    }
    try {
      const auto decoded = decode_raw(record->capability, record->raw, record->identifiers);
      if (!record->decoded || !(*record->decoded == decoded)) {
        report.problems.push_back(key + ": stored decoding differs from re-decoding the raw output");
      }
    } catch (const DecodeError&) {
      if (record->decoded || record->decode_error.empty()) {
        report.problems.push_back(key + ": raw output no longer decodes");
      }
    }
  }

  // Reports must be reproducible from the manifest and cache, and match what is on disk.
  std::random_device rd;
  const fs::path scratch = fs::temp_directory_path() / ("decoylab-audit-" + std::to_string(rd()) + std::to_string(rd()));
  try {
    const auto replayed = replay(run_dir / "manifest.json", scratch, run_dir / "cache.jsonl");
    if (!replayed.matches_manifest) report.problems.push_back("replayed reports differ from the manifest hashes");
  } catch (const std::exception& e) {
    report.problems.push_back(std::string("replay failed: ") + e.what());
  }
  std::error_code ignored;
  fs::remove_all(scratch, ignored);
  for (const auto& [relative, hash] : m.report_hashes) {
    const fs::path file = run_dir / relative;
    if (!fs::exists(file)) {
      report.problems.push_back("report missing: " + relative);
    } else if (sha256_hex(read_file(file)) != hash) {
      report.problems.push_back("report modified: " + relative);
    }
  }
  report.ok = report.problems.empty();
  return report;
}

DryRunEstimate dry_run(const ExperimentConfig& config) {
  const std::string id = backend_id(config.selected_backend(), config.seed);
  const ExperimentPlan plan = build_plan(config, id);
  DryRunEstimate e;
  e.backend_id = id;
  e.arms = plan.arms.size();
  e.prompts = plan.prompts();
  e.requests = plan.requests();
  const fs::path cache_path = fs::path(config.output) / "cache.jsonl";
  if (fs::exists(cache_path)) {
    const ResponseCache cache(cache_path, /*read_only=*/true);
    for (const auto& arm : plan.arms) {
      for (const auto& hash : arm.prompt_hashes) {
        for (std::size_t s = 0; s < arm.samples_per_prompt; ++s) {
          if (cache.contains(cache_key(id, hash, plan.capability, s))) ++e.cached;
        }
      }
    }
  }
  return e;
}

}  // namespace decoylab
