#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "decoylab/config.hpp"
#include "decoylab/errors.hpp"

using namespace decoylab;
using nlohmann::json;

namespace {

json minimal() { return {{"schema_version", 1}, {"experiment", "cross_profession"}}; }

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Parse, Defaults) {
  const auto c = parse_config(minimal());
  EXPECT_EQ(c.experiment, ExperimentKind::CrossProfession);
  EXPECT_EQ(c.selected_jobs().size(), 6u);
  EXPECT_EQ(c.backend, "rational");
  EXPECT_EQ(c.decoding.mode, DecodingMode::TokenLogprobs);
  EXPECT_EQ(c.decoding.top_k, 100);
  EXPECT_EQ(c.decoding.samples, 100u);
  EXPECT_EQ(c.decoding.control_repeats, 3u);
  EXPECT_EQ(c.phantom_rule, PhantomRule::Dominance);
  EXPECT_EQ(c.nominal_samples, 600);
  EXPECT_TRUE(c.selected_backend().simulated());
}

TEST(Parse, RejectsUnknownKeysAtAnyDepth) {
  auto top = minimal();
  top["sede"] = 1;
  EXPECT_NE(error_of(top).find("sede"), std::string::npos);
  auto nested = minimal();
  nested["decoding"] = {{"mode", "logprobs"}, {"topk", 5}};
  EXPECT_NE(error_of(nested).find("decoding.topk"), std::string::npos);
}

TEST(Parse, TypeAndRangeErrors) {
  auto bad = minimal();
  bad["seed"] = "seven";
  EXPECT_FALSE(error_of(bad).empty());
  bad = minimal();
  bad["schema_version"] = 2;
  EXPECT_NE(error_of(bad).find("schema_version"), std::string::npos);
  bad = minimal();
  bad["experiment"] = "everything";
  EXPECT_FALSE(error_of(bad).empty());
  bad = minimal();
  bad["jobs"] = {"Nurse", "nurse"};
  EXPECT_NE(error_of(bad).find("twice"), std::string::npos);
  bad = minimal();
  bad["jobs"] = {"Astronaut"};
  EXPECT_FALSE(error_of(bad).empty());
  bad = minimal();
  bad["decoding"] = {{"mode", "logprobs"}, {"top_k", 0}};
  EXPECT_FALSE(error_of(bad).empty());
  bad = minimal();
  bad["concurrency"] = 0;
  EXPECT_FALSE(error_of(bad).empty());
  bad = minimal();
  bad["backend"] = "nobody";
  EXPECT_NE(error_of(bad).find("nobody"), std::string::npos);
  EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Parse, ExperimentSpecificRules) {
  auto custom = minimal();
  custom["decoy"] = {{"q1", 2}, {"q2", 2}};
  EXPECT_NE(error_of(custom).find("custom"), std::string::npos);
  custom["experiment"] = "custom";
  custom["jobs"] = {"Nurse"};
  EXPECT_TRUE(error_of(custom).empty());
  custom["decoy"] = {{"q1", 3}, {"q2", 6}};
  EXPECT_FALSE(error_of(custom).empty());
  custom["decoy"] = {{"q1", 9}, {"q2", 6}};
  EXPECT_FALSE(error_of(custom).empty());

  auto warning = minimal();
  warning["experiment"] = "warning_robustness";
  warning["jobs"] = {"Nurse"};
  EXPECT_NE(error_of(warning).find("two jobs"), std::string::npos);

  auto gender = minimal();
  gender["experiment"] = "gender_decoys";
  gender["pronouns"] = {{"target", "her"}, {"competitor", "her"}, {"decoy", "his"}};
  EXPECT_NE(error_of(gender).find("opposite"), std::string::npos);
  gender["pronouns"] = {{"target", "his"}, {"competitor", "her"}, {"decoy", "her"}};
  EXPECT_TRUE(error_of(gender).empty());
}

TEST(Credentials, ApiKeyInTheFileIsRejected) {
  auto doc = minimal();
  doc["backend"] = "p";
  doc["backends"] = {{"p",
                      {{"kind", "remote"},
                       {"endpoint", "https://api.example.com"},
                       {"model", "m"},
                       {"api_key_env", "KEY"},
                       {"api_key", "sk-secret"}}}};
  const auto msg = error_of(doc);
  EXPECT_NE(msg.find("api_key"), std::string::npos);
  EXPECT_EQ(msg.find("sk-secret"), std::string::npos);

  doc["backends"]["p"].erase("api_key");
  const auto c = parse_config(doc);
  const auto& remote = std::get<RemoteBackendSpec>(c.selected_backend().kind);
  EXPECT_EQ(remote.api_key_env, "KEY");
  EXPECT_EQ(backend_id(c.selected_backend(), 0), "remote:https://api.example.com/v1/completions:m");

  doc["backends"]["p"]["api_key_env"] = "";
  EXPECT_FALSE(error_of(doc).empty());
  doc["backends"]["p"]["api_key_env"] = "KEY";
  doc["backends"]["p"]["endpoint"] = "ftp://x";
  EXPECT_FALSE(error_of(doc).empty());
}

TEST(Credentials, MissingVariableFailsWhenTheBackendIsBuilt) {
  auto doc = minimal();
  doc["backend"] = "p";
  doc["backends"] = {{"p",
                      {{"kind", "remote"},
                       {"endpoint", "http://127.0.0.1:9"},
                       {"model", "m"},
                       {"api_key_env", "DECOYLAB_SURELY_UNSET_VARIABLE"}}}};
  const auto c = parse_config(doc);
  EXPECT_THROW(make_backend(c.selected_backend(), c.decoding, 0), AuthError);
}

TEST(Backends, SimulatedDeclarations) {
  auto doc = minimal();
  doc["backend"] = "strong";
  doc["backends"] = {{"strong", {{"kind", "simulated"}, {"agent", "decoy_kernel"}, {"strength", 2.0}}}};
  const auto c = parse_config(doc);
  EXPECT_EQ(backend_id(c.selected_backend(), 3), "simulated:decoy_kernel(strength=2,sharpness=1);seed=3");
  doc["backends"]["strong"]["agent"] = "oracle";
  EXPECT_FALSE(error_of(doc).empty());
  doc["backends"]["strong"] = {{"kind", "simulated"}, {"agent", "rational"}, {"strength", 2.0}};
  EXPECT_FALSE(error_of(doc).empty());
  EXPECT_EQ(builtin_backends().size(), 4u);
  EXPECT_TRUE(builtin_backends().count("decoy-kernel"));
}

TEST(RoundTrip, CanonicalJsonIsStable) {
  auto doc = minimal();
  doc["experiment"] = "custom";
  doc["jobs"] = {"nurse", "WELDER"};
  doc["decoy"] = {{"q1", 4}, {"q2", 7}, {"has_permit", true}};
  doc["pronouns"] = {{"target", "her"}, {"competitor", "his"}, {"decoy", "their"}};
  doc["decoding"] = {{"mode", "sampling"}, {"samples", 50}, {"temperature", 0.7}, {"control_repeats", 1}};
  doc["seed"] = 11;
  const auto c = parse_config(doc);
  const auto canonical = config_to_json(c);
  EXPECT_EQ(canonical.at("jobs"), json({"Nurse", "Welder"}));
  const auto again = config_to_json(parse_config(canonical));
  EXPECT_EQ(canonical.dump(), again.dump());
  EXPECT_TRUE(canonical.at("backends").contains("rational"));
}

TEST(Load, FileWithCommentsAndShippedConfigs) {
  const auto dir = std::filesystem::temp_directory_path() / "decoylab-config-test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "c.json";
  {
    std::ofstream out(file);
    out << "// experiment\n{\n  \"schema_version\": 1, /* inline */\n  \"experiment\": \"decoy_space_sweep\",\n"
           "  \"jobs\": [\"Nurse\"]\n}\n";
  }
  const auto c = load_config(file);
  EXPECT_EQ(c.experiment, ExperimentKind::DecoySpaceSweep);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);

  for (const char* name : {"cross_profession.json", "sweep_fullstack.json", "remote_sampled.json"}) {
    EXPECT_NO_THROW(load_config(std::filesystem::path(DECOYLAB_TEST_DATA) / ".." / ".." / "configs" / name)) << name;
  }
}

TEST(Kinds, RoundTrip) {
  for (auto k : {ExperimentKind::CrossProfession, ExperimentKind::DecoySpaceSweep, ExperimentKind::GenderDecoys,
                 ExperimentKind::WarningRobustness, ExperimentKind::RoleRobustness, ExperimentKind::Custom}) {
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  }
}
