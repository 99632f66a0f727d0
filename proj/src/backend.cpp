#include "decoylab/backend.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "decoylab/errors.hpp"
#include "json.hpp"

namespace decoylab {

using nlohmann::json;

std::string_view to_string(DecodingMode mode) {
  return mode == DecodingMode::TokenLogprobs ? "logprobs" : "sampling";
}

DecodingMode parse_decoding_mode(std::string_view text) {
  if (text == "logprobs") return DecodingMode::TokenLogprobs;
  if (text == "sampling") return DecodingMode::SampleOnly;
  throw UsageError("unknown decoding mode '" + std::string(text) + "' (expected logprobs or sampling)");
}

void BackendCapability::validate() const {
  constexpr int kSurfaceFormsForThreeOptions = 12;
  if (mode == DecodingMode::TokenLogprobs && top_k < kSurfaceFormsForThreeOptions) {
    throw UsageError("top_k must be at least " + std::to_string(kSurfaceFormsForThreeOptions));
  }
  if (mode == DecodingMode::SampleOnly && !(temperature > 0.0 && std::isfinite(temperature))) {
    throw UsageError("sampling temperature must be positive");
  }
}

std::string BackendCapability::canonical() const {
  if (mode == DecodingMode::TokenLogprobs) return "logprobs;top_k=" + std::to_string(top_k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "sampling;temperature=%.17g", temperature);
  return buf;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string prompt_hash(const PromptBundle& prompt) { return sha256_hex(prompt.text); }

std::string cache_key(std::string_view backend_id, std::string_view prompt_hash,
                      const BackendCapability& capability, std::size_t sample_index) {
  std::string material;
  material.reserve(backend_id.size() + prompt_hash.size() + 64);
  material.append(backend_id).append("\n").append(prompt_hash).append("\n");
  material.append(capability.canonical()).append("\n").append(std::to_string(sample_index));
  return sha256_hex(material);
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata_to_json(const PromptMetadata& m) {
  json j = {
      {"job", m.job_title},
      {"condition", to_string(m.condition)},
      {"permutation", m.permutation_id},
      {"pronouns",
       {to_string(m.pronouns.target), to_string(m.pronouns.competitor), to_string(m.pronouns.decoy)}},
      {"warning", m.warning},
      {"role", to_string(m.role)},
  };
  if (m.decoy) {
    j["decoy"] = {m.decoy->q1, m.decoy->q2};
    j["decoy_permit"] = m.decoy_has_permit;
  }
  return j;
}

PromptMetadata metadata_from_json(const json& j) {
  PromptMetadata m;
  m.job_title = j.at("job").get<std::string>();
  m.condition = parse_condition(j.at("condition").get<std::string>());
  m.permutation_id = j.at("permutation").get<int>();
  const auto& p = j.at("pronouns");
  m.pronouns = {parse_pronoun(p.at(0).get<std::string>()), parse_pronoun(p.at(1).get<std::string>()),
                parse_pronoun(p.at(2).get<std::string>())};
  m.warning = j.at("warning").get<bool>();
  m.role = parse_role_variant(j.at("role").get<std::string>());
  if (j.contains("decoy")) {
    m.decoy = Point{j["decoy"].at(0).get<int>(), j["decoy"].at(1).get<int>()};
    m.decoy_has_permit = j.at("decoy_permit").get<bool>();
  }
  return m;
}

std::string ids_to_string(std::span<const char> ids) { return std::string(ids.begin(), ids.end()); }

json distribution_to_json(const OptionDistribution& d) {
  json j = {{"probability", d.probability}};
  if (d.sample_count) {
    j["sample_count"] = *d.sample_count;
    j["counts"] = d.counts;
    j["unmatched"] = d.unmatched;
  }
  return j;
}

OptionDistribution distribution_from_json(const json& j, std::span<const char> ids) {
  OptionDistribution d;
  d.identifiers.assign(ids.begin(), ids.end());
  d.probability = j.at("probability").get<std::vector<double>>();
  if (j.contains("sample_count")) {
    d.sample_count = j["sample_count"].get<std::size_t>();
    d.counts = j.at("counts").get<std::vector<std::size_t>>();
    d.unmatched = j.at("unmatched").get<std::size_t>();
  }
  return d;
}

}  // namespace

OptionDistribution decode_raw(const BackendCapability& capability, const RawOutput& raw,
                              std::span<const char> identifiers) {
  if (capability.mode == DecodingMode::TokenLogprobs) return decode_logprobs(raw.top_logprobs, identifiers);
  return tally_samples(raw.samples, identifiers);
}

TrialRecord make_trial_record(std::string key, std::string backend_id, BackendCapability capability,
                              std::string hash, const PromptBundle& prompt, std::size_t sample_index,
                              RawOutput raw) {
  TrialRecord r;
  r.cache_key = std::move(key);
  r.backend_id = std::move(backend_id);
  r.capability = capability;
  r.prompt_hash = std::move(hash);
  r.prompt = prompt.metadata;
  r.identifiers = prompt.identifiers;
  r.sample_index = sample_index;
  r.raw = std::move(raw);
  try {
    r.decoded = decode_raw(r.capability, r.raw, r.identifiers);
  } catch (const DecodeError& e) {
    r.decode_error = e.what();
  }
  r.timestamp = utc_timestamp();
  return r;
}

std::string trial_to_json_line(const TrialRecord& r) {
  json raw = json::object();
  if (r.capability.mode == DecodingMode::TokenLogprobs) {
    json tokens = json::array();
    for (const auto& t : r.raw.top_logprobs) tokens.push_back({t.token, t.logprob});
    raw["top_logprobs"] = std::move(tokens);
  } else {
    raw["samples"] = r.raw.samples;
  }
  json j = {
      {"key", r.cache_key},
      {"backend", r.backend_id},
      {"mode", to_string(r.capability.mode)},
      {"decoding", r.capability.canonical()},
      {"top_k", r.capability.top_k},
      {"temperature", r.capability.temperature},
      {"prompt_hash", r.prompt_hash},
      {"prompt", metadata_to_json(r.prompt)},
      {"identifiers", ids_to_string(r.identifiers)},
      {"sample_index", r.sample_index},
      {"raw", std::move(raw)},
      {"retries", r.raw.retries},
      {"timestamp", r.timestamp},
  };
  if (r.decoded) {
    j["decoded"] = distribution_to_json(*r.decoded);
  } else {
    j["decoded"] = nullptr;
    j["decode_error"] = r.decode_error;
  }
  return j.dump();
}

TrialRecord trial_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  TrialRecord r;
  r.cache_key = j.at("key").get<std::string>();
  r.backend_id = j.at("backend").get<std::string>();
  r.capability.mode = parse_decoding_mode(j.at("mode").get<std::string>());
  r.capability.top_k = j.at("top_k").get<int>();
  r.capability.temperature = j.at("temperature").get<double>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.prompt = metadata_from_json(j.at("prompt"));
  const auto ids = j.at("identifiers").get<std::string>();
  r.identifiers.assign(ids.begin(), ids.end());
  r.sample_index = j.at("sample_index").get<std::size_t>();
  const auto& raw = j.at("raw");
  if (raw.contains("top_logprobs")) {
    for (const auto& t : raw["top_logprobs"]) {
      r.raw.top_logprobs.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
    }
  }
  if (raw.contains("samples")) r.raw.samples = raw["samples"].get<std::vector<std::string>>();
  r.raw.retries = j.at("retries").get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  if (!j.at("decoded").is_null()) {
    r.decoded = distribution_from_json(j["decoded"], r.identifiers);
  } else {
    r.decode_error = j.value("decode_error", "");
  }
  return r;
}

ResponseCache::ResponseCache(std::filesystem::path file, bool read_only) : path_(std::move(file)) {
  if (!read_only && path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        TrialRecord r = trial_from_json_line(line);
        records_.try_emplace(r.cache_key, std::move(r));
      } catch (const std::exception& e) {
        throw std::runtime_error(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  if (read_only) return;
  out_.open(path_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open cache file " + path_.string());
}

std::optional<TrialRecord> ResponseCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

bool ResponseCache::contains(const std::string& key) const {
  std::lock_guard lock(mutex_);
  return records_.count(key) > 0;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void ResponseCache::append_locked(const TrialRecord& record) {
  if (!out_.is_open()) return;
  out_ << trial_to_json_line(record) << '\n';
  out_.flush();
}

std::pair<TrialRecord, bool> ResponseCache::get_or_produce(const std::string& key,
                                                           const std::function<TrialRecord()>& produce) {
  {
    std::unique_lock lock(mutex_);
    produced_.wait(lock, [&] { return in_flight_.count(key) == 0; });
    if (auto it = records_.find(key); it != records_.end()) return {it->second, true};
    in_flight_.insert(key);
  }
  TrialRecord record;
  try {
    record = produce();
  } catch (...) {
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    produced_.notify_all();
    throw;
  }
  std::lock_guard lock(mutex_);
  append_locked(record);
  records_.emplace(key, record);
  in_flight_.erase(key);
  produced_.notify_all();
  return {std::move(record), false};
}

Interrogator::Interrogator(std::string backend_id, BackendCapability capability, Backend* backend,
                           ResponseCache& cache)
    : backend_id_(std::move(backend_id)), capability_(capability), backend_(backend), cache_(cache) {
  capability_.validate();
}

std::string Interrogator::key_for(const std::string& hash, std::size_t sample_index) const {
  return cache_key(backend_id_, hash, capability_, sample_index);
}

TrialRecord Interrogator::query(const PromptBundle& prompt, const ChoiceSet& choice_set,
                                std::size_t sample_index) {
  return query(prompt, prompt_hash(prompt), choice_set, sample_index);
}

TrialRecord Interrogator::query(const PromptBundle& prompt, const std::string& hash, const ChoiceSet& choice_set,
                                std::size_t sample_index) {
  std::string key = key_for(hash, sample_index);
  auto [record, hit] = cache_.get_or_produce(key, [&] {
    if (backend_ == nullptr) throw ReplayError("cache has no record for key " + key, key);
    backend_calls_.fetch_add(1);
    RawOutput raw = backend_->complete(Request{prompt, choice_set, hash, sample_index});
    return make_trial_record(key, backend_id_, capability_, hash, prompt, sample_index, std::move(raw));
  });
  if (hit) cache_hits_.fetch_add(1);
  return record;
}

OptionDistribution assemble(const BackendCapability& capability, std::span<const TrialRecord> records,
                            std::span<const char> identifiers) {
  if (records.empty()) throw IncompleteDataError("no trial records to assemble");
  if (capability.mode == DecodingMode::TokenLogprobs) {
    if (records.size() != 1) throw UsageError("log-probability decoding uses exactly one record per prompt");
    return decode_raw(capability, records.front().raw, identifiers);
  }
  std::vector<std::string> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.insert(samples.end(), r.raw.samples.begin(), r.raw.samples.end());
  return tally_samples(samples, identifiers);
}

OptionDistribution estimate_by_sampling(Interrogator& interrogator, const PromptBundle& prompt,
                                        const ChoiceSet& choice_set, std::size_t n, std::size_t first_index) {
  if (n < 1) throw UsageError("sampling needs at least one sample");
  if (interrogator.capability().mode != DecodingMode::SampleOnly) {
    throw UsageError("estimate_by_sampling needs a sampling backend");
  }
  const std::string hash = prompt_hash(prompt);
  std::vector<TrialRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) records.push_back(interrogator.query(prompt, hash, choice_set, first_index + i));
  return assemble(interrogator.capability(), records, prompt.identifiers);
}

}  // namespace decoylab
