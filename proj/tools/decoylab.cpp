// decoylab command line: run, replay, audit, dry-run, list-jobs, render-prompt.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "decoylab/config.hpp"
#include "decoylab/errors.hpp"
#include "decoylab/experiment.hpp"
#include "decoylab/report.hpp"

namespace fs = std::filesystem;
using namespace decoylab;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::optional<std::string> output;
  bool strict = false;
};

void add_config_flags(CLI::App* cmd, Overrides& o, bool strict_flag) {
  cmd->add_option("--config", o.config, "experiment config file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--backend", o.backend, "backend name, declared in the config or built in");
  cmd->add_option("--seed", o.seed, "seed for simulated backends");
  cmd->add_option("--concurrency", o.concurrency, "parallel requests")->check(CLI::Range(1, 256));
  cmd->add_option("--output", o.output, "output directory");
  if (strict_flag) cmd->add_flag("--strict", o.strict, "stop at the first failed trial");
}

ExperimentConfig load_with(const Overrides& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.backend) c.backend = *o.backend;
  if (o.seed) c.seed = *o.seed;
  if (o.concurrency) c.concurrency = *o.concurrency;
  if (o.output) c.output = *o.output;
  c.validate();
  return c;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig config = load_with(o);
  RunOptions options;
  options.strict = o.strict;
  const RunOutcome out = run_experiment(config, options);
  std::printf("%-28s %-26s %9s  %s\n", "job", "variant", "bias", "verdict");
  for (std::size_t i = 0; i < out.plan.comparisons.size(); ++i) {
    const auto& c = out.plan.comparisons[i];
    const auto& r = out.results.comparisons[i];
    std::printf("%-28s %-26s %9s  %s\n", c.job.c_str(), c.variant.c_str(),
                r.bias ? format_number(r.bias->bias).c_str() : "-", r.bias ? r.verdict.c_str() : r.note.c_str());
  }
  for (std::size_t i = 0; i < out.plan.group_tests.size(); ++i) {
    const auto& r = out.results.group_tests[i];
    if (r.outcome) {
      std::printf("%s (%s): statistic %s, p %s\n", out.plan.group_tests[i].label.c_str(),
                  std::string(to_string(r.outcome->kind)).c_str(), format_number(r.outcome->statistic).c_str(),
                  format_number(r.outcome->p_value).c_str());
    } else {
      std::printf("%s: %s\n", out.plan.group_tests[i].label.c_str(), r.note.c_str());
    }
  }
  std::printf("requests: %zu planned, %zu sent, %zu from cache; failures: %zu\n", out.manifest.planned_requests,
              out.manifest.backend_calls, out.manifest.cache_hits, out.manifest.failures.size());
  std::printf("wrote %s\n", (out.output_dir / "manifest.json").string().c_str());
  return 0;
}

int cmd_dry_run(const Overrides& o) {
  const ExperimentConfig config = load_with(o);
  const DryRunEstimate e = dry_run(config);
  std::printf("backend:  %s\n", e.backend_id.c_str());
  std::printf("arms:     %zu\n", e.arms);
  std::printf("prompts:  %zu\n", e.prompts);
  std::printf("requests: %zu (%zu already cached, %zu to send)\n", e.requests, e.cached, e.requests - e.cached);
  return 0;
}

fs::path manifest_path(const std::string& arg) {
  const fs::path p(arg);
  return fs::is_directory(p) ? p / "manifest.json" : p;
}

int cmd_replay(const std::string& run, const std::string& output) {
  const auto out = replay(manifest_path(run), output);
  std::printf("regenerated %zu report files in %s\n", out.report_hashes.size(), output.c_str());
  if (!out.matches_manifest) {
    std::fprintf(stderr, "replayed reports differ from the manifest\n");
    return 3;
  }
  return 0;
}

int cmd_audit(const std::string& run_dir) {
  const AuditReport r = audit(run_dir);
  for (const auto& p : r.problems) std::printf("problem: %s\n", p.c_str());
  std::printf("%s: %zu trials checked, %zu problems\n", r.ok ? "audit passed" : "audit failed", r.trials_checked,
              r.problems.size());
  return r.ok ? 0 : 3;
}

int cmd_list_jobs() {
  for (const auto& job : builtin_jobs()) {
    std::string tags;
    for (const auto& t : job.tags) tags += (tags.empty() ? "" : ", ") + t;
    std::printf("%s\n  q1: %s\n  q2: %s\n  tags: %s\n", job.title.c_str(), job.first.label().c_str(),
                job.second.label().c_str(), tags.c_str());
  }
  return 0;
}

struct PromptArgs {
  std::string job = "Nurse";
  std::string condition = "treatment";
  int permutation = 0;
  std::string role = "concise1";
  bool warning = false;
  std::vector<int> decoy;
  std::optional<bool> permit;
  std::string target_pronoun = "their", competitor_pronoun = "their", decoy_pronoun = "their";
};

int cmd_render_prompt(const PromptArgs& a) {
  const Job& job = find_job(a.job);
  const Condition condition = parse_condition(a.condition);
  const PronounScheme pronouns{parse_pronoun(a.target_pronoun), parse_pronoun(a.competitor_pronoun),
                               parse_pronoun(a.decoy_pronoun)};
  std::optional<ChoiceSet> set;
  if (!a.decoy.empty()) {
    if (condition != Condition::Treatment) throw UsageError("--decoy needs the treatment condition");
    if (a.decoy.size() != 2) throw UsageError("--decoy takes two levels");
    set = choice_set_with_decoy(job, {a.decoy[0], a.decoy[1]}, a.permit.value_or(true), pronouns);
  } else {
    set = baseline_choice_set(job, condition, pronouns);
  }
  const auto bundle =
      render_prompt(*set, permutation_by_id(condition, a.permutation), parse_role_variant(a.role), a.warning);
  std::fwrite(bundle.text.data(), 1, bundle.text.size(), stdout);
  std::fputc('\n', stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoy-effect experiments on hiring decisions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  Overrides run_o, dry_o;
  auto* run = app.add_subcommand("run", "run an experiment and write reports, cache and manifest");
  add_config_flags(run, run_o, true);
  auto* dry = app.add_subcommand("dry-run", "count the requests a run would send");
  add_config_flags(dry, dry_o, false);

  std::string replay_src, replay_out;
  auto* rep = app.add_subcommand("replay", "regenerate reports from a manifest and its cache");
  rep->add_option("run", replay_src, "run directory or manifest.json")->required()->check(CLI::ExistingPath);
  rep->add_option("--output", replay_out, "directory for the regenerated reports")->required();

  std::string audit_dir;
  auto* aud = app.add_subcommand("audit", "check that every report number traces to cached trials");
  aud->add_option("run", audit_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* list = app.add_subcommand("list-jobs", "show the built-in jobs");

  PromptArgs pa;
  auto* render = app.add_subcommand("render-prompt", "print one prompt");
  render->add_option("--job", pa.job, "job title")->capture_default_str();
  render->add_option("--condition", pa.condition, "control or treatment")->capture_default_str();
  render->add_option("--permutation", pa.permutation, "permutation id")->capture_default_str();
  render->add_option("--role", pa.role, "succinct, concise1, concise2 or verbose")->capture_default_str();
  render->add_flag("--warning", pa.warning, "include the decoy warning");
  render->add_option("--decoy", pa.decoy, "decoy levels q1 q2")->expected(2);
  render->add_option("--permit", pa.permit, "whether the decoy holds a permit");
  render->add_option("--target-pronoun", pa.target_pronoun)->capture_default_str();
  render->add_option("--competitor-pronoun", pa.competitor_pronoun)->capture_default_str();
  render->add_option("--decoy-pronoun", pa.decoy_pronoun)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_o);
    if (dry->parsed()) return cmd_dry_run(dry_o);
    if (rep->parsed()) return cmd_replay(replay_src, replay_out);
    if (aud->parsed()) return cmd_audit(audit_dir);
    if (list->parsed()) return cmd_list_jobs();
    if (render->parsed()) return cmd_render_prompt(pa);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ReplayError& e) {
    std::fprintf(stderr, "replay error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
