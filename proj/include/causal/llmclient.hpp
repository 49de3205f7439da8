#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "causal/corpus.hpp"
#include "causal/prompt.hpp"

namespace causal::llm {

inline constexpr const char* kApiKeyEnv = "CAUSAL_HARNESS_API_KEY";

enum class Backend { Remote, MockOracle, MockCanned };

std::string_view to_string(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

struct ModelConfig {
  Backend backend = Backend::MockOracle;
  std::string model_name = "mock";
  std::string endpoint_url;  // remote only, e.g. https://api.openai.com/v1
  double temperature = 0.0;
  int max_tokens = 512;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int concurrency_limit = 4;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_backoff{30000};
  double requests_per_second = 0.0;  // 0 disables request pacing

  // Throws LlmError(Config) when a field is out of range or a remote
  // backend lacks endpoint/model.
  void validate() const;
};

struct RawResponse {
  std::string text;  // assistant message content, unmodified
  std::string model_name;
  bool from_cache = false;
  double latency_seconds = 0.0;
  int attempts = 0;  // requests sent; 0 for cache hits
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { Config, AuthMissing, Timeout, RateLimited, HttpError, BadResponse, CacheIo };

  LlmError(Kind kind, const std::string& what, int http_status = 0)
      : std::runtime_error(what), kind_(kind), http_status_(http_status) {}

  Kind kind() const { return kind_; }
  int http_status() const { return http_status_; }

 private:
  Kind kind_;
  int http_status_;
};

// Context document -> gold pair, used by the mock-oracle backend. When a
// context is registered twice, the first pair wins.
class OracleTable {
 public:
  void add(std::string context, corpus::GoldPair gold);
  static OracleTable from_segments(std::span<const corpus::Segment> segments);

  const corpus::GoldPair* find(const std::string& context) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, corpus::GoldPair> table_;
};

using WarningSink = std::function<void(const std::string&)>;

// Stable SHA-256 hex digest over backend, model name, temperature,
// max_tokens and the rendered prompt text.
std::string cache_key(const ModelConfig& config, const prompt::RenderedPrompt& prompt);

// Thread-safe. Remote calls are capped at config.concurrency_limit in flight
// and optionally paced to requests_per_second.
class CompletionClient {
 public:
  // Throws LlmError(Config / AuthMissing) before any request is made.
  explicit CompletionClient(ModelConfig config, OracleTable oracle = {},
                            std::vector<std::string> canned_script = {});
  ~CompletionClient();

  CompletionClient(const CompletionClient&) = delete;
  CompletionClient& operator=(const CompletionClient&) = delete;

  const ModelConfig& config() const { return config_; }

  RawResponse complete(const prompt::RenderedPrompt& prompt);

  // On a valid cache entry returns it with from_cache=true and no request.
  // Corrupt entries are reported through the warning sink, then replaced.
  RawResponse cached_complete(const prompt::RenderedPrompt& prompt,
                              const std::filesystem::path& cache_dir);

  void set_warning_sink(WarningSink sink) { warn_ = std::move(sink); }

 private:
  RawResponse complete_remote(const prompt::RenderedPrompt& prompt);
  RawResponse complete_canned();
  void acquire_slot();
  void release_slot();
  void pace();
  std::mutex& key_mutex(const std::string& key);

  ModelConfig config_;
  OracleTable oracle_;
  std::vector<std::string> script_;
  std::size_t script_pos_ = 0;
  std::string api_key_;
  WarningSink warn_;

  std::mutex mu_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
  std::chrono::steady_clock::time_point next_request_{};
  std::map<std::string, std::unique_ptr<std::mutex>> key_locks_;
};

}  // namespace causal::llm
