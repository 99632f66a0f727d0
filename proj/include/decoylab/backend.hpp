#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "decoylab/decode.hpp"
#include "decoylab/prompt.hpp"

namespace decoylab {

enum class DecodingMode { TokenLogprobs, SampleOnly };

std::string_view to_string(DecodingMode mode);
DecodingMode parse_decoding_mode(std::string_view text);

struct BackendCapability {
  DecodingMode mode = DecodingMode::TokenLogprobs;
  int top_k = 100;           // TokenLogprobs
  double temperature = 1.0;  // SampleOnly

  // top_k must cover every surface form of three identifiers; temperature > 0.
  void validate() const;
  // Stable text form used in cache keys.
  std::string canonical() const;

  bool operator==(const BackendCapability&) const = default;
};

struct RawOutput {
  std::vector<TokenLogprob> top_logprobs;  // TokenLogprobs
  std::vector<std::string> samples;        // SampleOnly
  int retries = 0;

  bool operator==(const RawOutput&) const = default;
};

struct Request {
  const PromptBundle& prompt;
  const ChoiceSet& choice_set;
  const std::string& prompt_hash;
  std::size_t sample_index = 0;
};

// A decision-maker interrogated one prompt at a time. Implementations must
// allow concurrent calls to complete().
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual BackendCapability capability() const = 0;
  virtual RawOutput complete(const Request& request) = 0;
};

std::string sha256_hex(std::string_view data);
std::string prompt_hash(const PromptBundle& prompt);
std::string cache_key(std::string_view backend_id, std::string_view prompt_hash,
                      const BackendCapability& capability, std::size_t sample_index);

// One backend interrogation as persisted in the cache file.
struct TrialRecord {
  std::string cache_key;
  std::string backend_id;
  BackendCapability capability;
  std::string prompt_hash;
  PromptMetadata prompt;
  std::vector<char> identifiers;
  std::size_t sample_index = 0;
  RawOutput raw;
  std::optional<OptionDistribution> decoded;
  std::string decode_error;
  std::string timestamp;
};

// Decodes raw output alone: log-probabilities, or the samples it carries.
OptionDistribution decode_raw(const BackendCapability& capability, const RawOutput& raw,
                              std::span<const char> identifiers);

// Builds a record and fills `decoded` / `decode_error` from the raw output.
TrialRecord make_trial_record(std::string key, std::string backend_id, BackendCapability capability,
                              std::string prompt_hash, const PromptBundle& prompt, std::size_t sample_index,
                              RawOutput raw);

std::string trial_to_json_line(const TrialRecord& record);
TrialRecord trial_from_json_line(std::string_view line);

// Append-only, content-addressed store of TrialRecords backed by a JSONL file.
// Concurrent lookups and appends for distinct keys proceed independently;
// callers racing on one key wait for the first producer.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory only
  // A read-only cache loads the file, if any, and never writes to it.
  explicit ResponseCache(std::filesystem::path file, bool read_only = false);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<TrialRecord> find(const std::string& key) const;
  bool contains(const std::string& key) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

  // Returns the cached record, or runs `produce` once and appends its result.
  // The bool is true on a cache hit.
  std::pair<TrialRecord, bool> get_or_produce(const std::string& key,
                                              const std::function<TrialRecord()>& produce);

 private:
  void append_locked(const TrialRecord& record);

  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mutex_;
  std::condition_variable produced_;
  std::map<std::string, TrialRecord> records_;
  std::set<std::string> in_flight_;
};

// Cache-first access to a backend. With no backend attached every miss is a
// ReplayError naming the missing key.
class Interrogator {
 public:
  Interrogator(std::string backend_id, BackendCapability capability, Backend* backend, ResponseCache& cache);

  const std::string& backend_id() const { return backend_id_; }
  const BackendCapability& capability() const { return capability_; }

  std::string key_for(const std::string& prompt_hash, std::size_t sample_index) const;
  TrialRecord query(const PromptBundle& prompt, const ChoiceSet& choice_set, std::size_t sample_index);
  TrialRecord query(const PromptBundle& prompt, const std::string& hash, const ChoiceSet& choice_set,
                    std::size_t sample_index);

  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  std::string backend_id_;
  BackendCapability capability_;
  Backend* backend_;
  ResponseCache& cache_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Combines the records of one prompt: a single log-probability record, or n
// sampled records pooled into frequencies.
OptionDistribution assemble(const BackendCapability& capability, std::span<const TrialRecord> records,
                            std::span<const char> identifiers);

// Queries samples [first_index, first_index + n) and tallies them.
OptionDistribution estimate_by_sampling(Interrogator& interrogator, const PromptBundle& prompt,
                                        const ChoiceSet& choice_set, std::size_t n, std::size_t first_index = 0);

}  // namespace decoylab
