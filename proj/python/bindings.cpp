#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "decoylab/agents.hpp"
#include "decoylab/config.hpp"
#include "decoylab/decode.hpp"
#include "decoylab/errors.hpp"
#include "decoylab/experiment.hpp"
#include "decoylab/prompt.hpp"
#include "decoylab/stats.hpp"

namespace py = pybind11;
using namespace decoylab;
using nlohmann::json;

namespace {

Point to_point(const std::pair<int, int>& p) { return {p.first, p.second}; }

py::dict outcome_dict(const TestOutcome& o) {
  py::dict d;
  d["test"] = std::string(to_string(o.kind));
  d["statistic"] = o.statistic;
  d["df"] = o.df;
  d["p_value"] = o.p_value;
  d["significant"] = o.significant;
  return d;
}

std::string classify(const std::string& title, std::pair<int, int> decoy) {
  const Job& job = find_job(title);
  const auto pos = baseline_positions(job);
  return std::string(
      to_string(classify_decoy(job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor}, to_point(decoy))));
}

std::vector<py::dict> grid(const std::string& title, const std::string& rule) {
  const Job& job = find_job(title);
  const auto pos = baseline_positions(job);
  std::vector<py::dict> out;
  for (const auto& g : decoy_grid(job, {Role::Target, pos.target}, {Role::Competitor, pos.competitor},
                                  parse_phantom_rule(rule))) {
    py::dict d;
    d["point"] = std::make_pair(g.point.q1, g.point.q2);
    d["region"] = std::string(to_string(g.region));
    d["has_permit"] = g.has_permit;
    out.push_back(std::move(d));
  }
  return out;
}

std::string render(const std::string& title, const std::string& condition, int permutation, const std::string& role,
                   bool warning, std::optional<std::pair<int, int>> decoy, std::optional<bool> permit,
                   std::optional<std::vector<std::string>> pronouns) {
  const Job& job = find_job(title);
  PronounScheme scheme = PronounScheme::neutral();
  if (pronouns) {
    if (pronouns->size() != 3) throw UsageError("pronouns needs three entries: target, competitor, decoy");
    scheme = {parse_pronoun((*pronouns)[0]), parse_pronoun((*pronouns)[1]), parse_pronoun((*pronouns)[2])};
  }
  const Condition cond = parse_condition(condition);
  ChoiceSet set = baseline_choice_set(job, cond, scheme);
  if (decoy) {
    if (cond == Condition::Control) throw UsageError("a control set has no decoy");
    set = choice_set_with_decoy(job, to_point(*decoy), permit.value_or(true), scheme);
  }
  return render_prompt(set, permutation_by_id(cond, permutation), parse_role_variant(role), warning).text;
}

std::map<std::string, double> decode(const std::vector<std::pair<std::string, double>>& top,
                                     const std::string& identifiers) {
  std::vector<TokenLogprob> raw;
  for (const auto& [token, lp] : top) raw.push_back({token, lp});
  const std::vector<char> ids(identifiers.begin(), identifiers.end());
  const auto d = decode_logprobs(raw, ids);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[std::string(1, ids[i])] = d.probability[i];
  return out;
}

std::string run(const std::string& config_json, std::optional<std::string> output, bool strict) {
  const ExperimentConfig config = parse_config(json::parse(config_json));
  RunOptions options;
  options.strict = strict;
  if (output) options.output = *output;
  py::gil_scoped_release release;
  return run_experiment(config, options).manifest.to_json().dump();
}

py::dict dry(const std::string& config_json) {
  const auto e = dry_run(parse_config(json::parse(config_json)));
  py::dict d;
  d["arms"] = e.arms;
  d["prompts"] = e.prompts;
  d["requests"] = e.requests;
  d["cached"] = e.cached;
  d["backend_id"] = e.backend_id;
  return d;
}

py::dict do_replay(const std::string& manifest, const std::string& output) {
  ReplayOutcome r;
  {
    py::gil_scoped_release release;
    r = replay(manifest, output);
  }
  py::dict d;
  d["matches_manifest"] = r.matches_manifest;
  d["report_hashes"] = r.report_hashes;
  return d;
}

py::dict do_audit(const std::string& run_dir) {
  AuditReport a;
  {
    py::gil_scoped_release release;
    a = audit(run_dir);
  }
  py::dict d;
  d["ok"] = a.ok;
  d["trials_checked"] = a.trials_checked;
  d["problems"] = a.problems;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Decoy-effect experiment harness";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);
  py::register_exception<ReplayError>(m, "ReplayError", PyExc_LookupError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);
  py::register_exception<StrictModeError>(m, "StrictModeError", PyExc_RuntimeError);

  m.def("version", [] { return std::string(tool_version()); });
  m.def("list_jobs", [] {
    std::vector<std::string> out;
    for (const auto& j : builtin_jobs()) out.push_back(j.title);
    return out;
  });
  m.def("classify_decoy", &classify, py::arg("job"), py::arg("decoy"));
  m.def("decoy_grid", &grid, py::arg("job"), py::arg("phantom_rule") = "dominance");
  m.def("render_prompt", &render, py::arg("job"), py::arg("condition") = "treatment", py::arg("permutation") = 0,
        py::arg("role") = "concise1", py::arg("warning") = false, py::arg("decoy") = py::none(),
        py::arg("has_permit") = py::none(), py::arg("pronouns") = py::none());
  m.def("decode_logprobs", &decode, py::arg("top_logprobs"), py::arg("identifiers") = "ABC");
  m.def("chi_square", [](double tc, double oc, double tt, double ot) {
    return outcome_dict(chi_square_target({tc, oc}, {tt, ot}));
  }, py::arg("control_target"), py::arg("control_other"), py::arg("treatment_target"), py::arg("treatment_other"));
  m.def("paired_t", [](const std::vector<double>& x, const std::vector<double>& y) {
    return outcome_dict(paired_t_test(x, y));
  }, py::arg("x"), py::arg("y"));
  m.def("rm_anova", [](const std::vector<std::vector<double>>& rows) { return outcome_dict(rm_anova(rows)); },
        py::arg("rows"));
  m.def("_run", &run, py::arg("config_json"), py::arg("output") = py::none(), py::arg("strict") = false);
  m.def("_dry_run", &dry, py::arg("config_json"));
  m.def("replay", &do_replay, py::arg("manifest"), py::arg("output"));
  m.def("audit", &do_audit, py::arg("run_dir"));
}
