#include "causal/llmclient.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "causal/extract.hpp"
#include "causal/text.hpp"

namespace causal::llm {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string hex_sha256(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// Shortest round-trip representation; identical on every conforming platform.
std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 || status == 503 ||
         status == 504;
}

json request_params(const ModelConfig& config, const prompt::RenderedPrompt& prompt) {
  return {
      {"backend", to_string(config.backend)},
      {"model", config.model_name},
      {"endpoint", config.endpoint_url},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
      {"prompt_kind", prompt::to_string(prompt.kind)},
      {"prompt", prompt.text},
  };
}

std::optional<RawResponse> read_cache_entry(const std::filesystem::path& path,
                                            const std::string& key,
                                            const prompt::RenderedPrompt& prompt,
                                            std::string& problem) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    const json j = json::parse(body);
    if (j.at("key").get<std::string>() != key) {
      problem = "key field does not match file name";
      return std::nullopt;
    }
    if (j.at("request").at("prompt").get<std::string>() != prompt.text) {
      problem = "stored prompt differs from the requested prompt";
      return std::nullopt;
    }
    RawResponse r;
    r.text = j.at("response").at("text").get<std::string>();
    r.model_name = j.at("response").at("model_name").get<std::string>();
    r.from_cache = true;
    return r;
  } catch (const json::exception& e) {
    problem = e.what();
    return std::nullopt;
  }
}

void write_cache_entry(const std::filesystem::path& dir, const std::string& key,
                       const ModelConfig& config, const prompt::RenderedPrompt& prompt,
                       const RawResponse& response) {
  const json envelope = {
      {"version", 1},
      {"key", key},
      {"request", request_params(config, prompt)},
      {"response",
       {{"text", response.text},
        {"model_name", response.model_name},
        {"latency_seconds", response.latency_seconds}}},
  };
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LlmError(LlmError::Kind::CacheIo, "cannot create cache dir " + dir.string() + ": " + ec.message());

  std::ostringstream tmp_name;
  tmp_name << key << ".json.tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const auto tmp = dir / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << envelope.dump(2) << '\n';
    if (!out) throw LlmError(LlmError::Kind::CacheIo, "cannot write cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, dir / (key + ".json"), ec);
  if (ec) throw LlmError(LlmError::Kind::CacheIo, "cannot commit cache entry: " + ec.message());
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Remote: return "remote";
    case Backend::MockOracle: return "mock-oracle";
    case Backend::MockCanned: return "mock-canned";
  }
  return "remote";
}

std::optional<Backend> parse_backend(std::string_view name) {
  for (auto b : {Backend::Remote, Backend::MockOracle, Backend::MockCanned}) {
    if (name == to_string(b)) return b;
  }
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw LlmError(LlmError::Kind::Config, msg); };
  if (!(temperature >= 0.0)) fail("temperature must be >= 0");
  if (max_tokens <= 0) fail("max_tokens must be positive");
  if (!(timeout_seconds > 0.0)) fail("timeout must be positive");
  if (max_retries < 0) fail("max_retries must be >= 0");
  if (concurrency_limit <= 0) fail("concurrency_limit must be positive");
  if (backoff_factor < 1.0) fail("backoff factor must be >= 1");
  if (requests_per_second < 0.0) fail("requests_per_second must be >= 0");
  if (backend == Backend::Remote) {
    if (endpoint_url.empty()) fail("remote backend requires an endpoint url");
    if (model_name.empty()) fail("remote backend requires a model name");
    if (!endpoint_url.starts_with("http://") && !endpoint_url.starts_with("https://")) {
      fail("endpoint url must start with http:// or https://");
    }
  }
}

void OracleTable::add(std::string context, corpus::GoldPair gold) {
  table_.try_emplace(std::move(context), std::move(gold));
}

OracleTable OracleTable::from_segments(std::span<const corpus::Segment> segments) {
  OracleTable table;
  for (const auto& seg : segments) {
    if (seg.gold) table.add(seg.text, *seg.gold);
  }
  return table;
}

const corpus::GoldPair* OracleTable::find(const std::string& context) const {
  const auto it = table_.find(context);
  return it == table_.end() ? nullptr : &it->second;
}

std::string cache_key(const ModelConfig& config, const prompt::RenderedPrompt& prompt) {
  // Length-prefixed fields so no two distinct inputs share a preimage.
  std::string material = "causal-harness-cache-v1\n";
  auto field = [&](std::string_view name, std::string_view value) {
    material.append(name);
    material.push_back(':');
    material.append(std::to_string(value.size()));
    material.push_back(':');
    material.append(value);
    material.push_back('\n');
  };
  field("backend", to_string(config.backend));
  field("model", config.model_name);
  field("temperature", shortest(config.temperature));
  field("max_tokens", std::to_string(config.max_tokens));
  field("prompt", prompt.text);
  return hex_sha256(material);
}

CompletionClient::CompletionClient(ModelConfig config, OracleTable oracle,
                                   std::vector<std::string> canned_script)
    : config_(std::move(config)), oracle_(std::move(oracle)), script_(std::move(canned_script)) {
  config_.validate();
  if (config_.backend == Backend::Remote) {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
      throw LlmError(LlmError::Kind::AuthMissing,
                     std::string("environment variable ") + kApiKeyEnv + " is not set");
    }
    api_key_ = key;
  }
  warn_ = [](const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); };
}

CompletionClient::~CompletionClient() = default;

RawResponse CompletionClient::complete(const prompt::RenderedPrompt& prompt) {
  switch (config_.backend) {
    case Backend::Remote:
      return complete_remote(prompt);
    case Backend::MockCanned:
      return complete_canned();
    case Backend::MockOracle: {
      RawResponse r;
      r.model_name = config_.model_name;
      r.attempts = 1;
      if (const auto* gold = oracle_.find(prompt.context)) {
        r.text = extract::serialize_candidate(gold->cause, gold->effect);
      }
      return r;
    }
  }
  throw LlmError(LlmError::Kind::Config, "unknown backend");
}

RawResponse CompletionClient::complete_canned() {
  std::lock_guard lock(mu_);
  if (script_pos_ >= script_.size()) {
    throw LlmError(LlmError::Kind::BadResponse, "canned script exhausted");
  }
  RawResponse r;
  r.text = script_[script_pos_++];
  r.model_name = config_.model_name;
  r.attempts = 1;
  return r;
}

void CompletionClient::acquire_slot() {
  std::unique_lock lock(mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < config_.concurrency_limit; });
  ++in_flight_;
}

void CompletionClient::release_slot() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

void CompletionClient::pace() {
  if (config_.requests_per_second <= 0.0) return;
  const auto interval = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / config_.requests_per_second));
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = std::max(now, next_request_);
    next_request_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

RawResponse CompletionClient::complete_remote(const prompt::RenderedPrompt& prompt) {
  const Endpoint ep = split_endpoint(config_.endpoint_url);
  const std::string path = ep.base_path + "/chat/completions";
  const json body = {
      {"model", config_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
  };
  const std::string payload = body.dump();
  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

  const int max_attempts = config_.max_retries + 1;
  auto delay = config_.initial_backoff;
  LlmError last(LlmError::Kind::HttpError, "no request sent");
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(std::min(delay, config_.max_backoff));

    pace();
    acquire_slot();
    const auto started = Clock::now();
    httplib::Result res;
    {
      httplib::Client cli(ep.origin);
      cli.set_connection_timeout(timeout_us);
      cli.set_read_timeout(timeout_us);
      cli.set_write_timeout(timeout_us);
      res = cli.Post(path, headers, payload, "application/json");
    }
    release_slot();
    const double latency = std::chrono::duration<double>(Clock::now() - started).count();

    std::chrono::milliseconds retry_after{0};
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
      last = LlmError(timed_out ? LlmError::Kind::Timeout : LlmError::Kind::HttpError,
                      "request to " + config_.endpoint_url + " failed: " + httplib::to_string(err));
    } else if (res->status == 200) {
      try {
        const json reply = json::parse(res->body);
        RawResponse r;
        r.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        r.model_name = reply.contains("model") && reply["model"].is_string()
                           ? reply["model"].get<std::string>()
                           : config_.model_name;
        r.latency_seconds = latency;
        r.attempts = attempt;
        return r;
      } catch (const json::exception& e) {
        throw LlmError(LlmError::Kind::BadResponse,
                       std::string("malformed chat completion response: ") + e.what(), 200);
      }
    } else {
      const int status = res->status;
      last = LlmError(status == 429 ? LlmError::Kind::RateLimited : LlmError::Kind::HttpError,
                      "endpoint returned HTTP " + std::to_string(status), status);
      if (!retryable_status(status)) throw last;
      if (res->has_header("Retry-After")) {
        const auto value = res->get_header_value("Retry-After");
        int seconds = 0;
        if (std::from_chars(value.data(), value.data() + value.size(), seconds).ec == std::errc{}) {
          retry_after = std::chrono::seconds(seconds);
        }
      }
    }
    delay = std::max(retry_after, attempt == 1 ? config_.initial_backoff
                                               : std::chrono::milliseconds(static_cast<long long>(
                                                     static_cast<double>(delay.count()) *
                                                     config_.backoff_factor)));
  }
  throw last;
}

std::mutex& CompletionClient::key_mutex(const std::string& key) {
  std::lock_guard lock(mu_);
  auto& slot = key_locks_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

RawResponse CompletionClient::cached_complete(const prompt::RenderedPrompt& prompt,
                                              const std::filesystem::path& cache_dir) {
  const std::string key = cache_key(config_, prompt);
  const auto path = cache_dir / (key + ".json");
  std::lock_guard key_lock(key_mutex(key));

  std::string problem;
  if (auto hit = read_cache_entry(path, key, prompt, problem)) return *hit;
  if (!problem.empty() && warn_) {
    warn_("corrupt cache entry " + path.string() + " (" + problem + "); refetching");
  }

  RawResponse fresh = complete(prompt);
  write_cache_entry(cache_dir, key, config_, prompt, fresh);
  return fresh;
}

}  // namespace causal::llm
