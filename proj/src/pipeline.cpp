#include "causal/pipeline.hpp"

#include "causal/text.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <exception>
#include <thread>

namespace causal::pipeline {
namespace {

// Replaces a generated string with its grounded source span, or blanks it.
std::optional<extract::MatchMethod> ground_field(std::string& field, const std::string& source,
                                                 const char* name, const PredictOptions& options,
                                                 std::vector<std::string>& warnings) {
  if (text::trim(field).empty()) {
    field.clear();
    return std::nullopt;
  }
  if (!options.ground) return std::nullopt;
  if (auto span = extract::ground_span(field, source, options.grounding)) {
    field = span->matched_text;
    return span->method;
  }
  warnings.push_back(std::string(name) + " could not be grounded in the source text");
  field.clear();
  return std::nullopt;
}

}  // namespace

RowOutcome predict_row(const corpus::Segment& segment, llm::CompletionClient* client,
                       const PredictOptions& options) {
  RowOutcome out;
  out.prediction.id = segment.id;
  out.prediction.text = segment.text;

  extract::ExtractionCandidate candidate;
  if (client == nullptr) {
    candidate = extract::cue_baseline(segment.text);
  } else {
    const auto rendered = prompt::render_prompt(options.prompt_kind, segment.text);
    if (rendered.warning) out.warnings.push_back(*rendered.warning);
    try {
      const auto response = options.cache_dir.empty()
                                ? client->complete(rendered)
                                : client->cached_complete(rendered, options.cache_dir);
      out.from_cache = response.from_cache;
      candidate = extract::parse_response(response.text);
    } catch (const llm::LlmError& e) {
      if (e.kind() == llm::LlmError::Kind::CacheIo) throw;
      out.backend_failed = true;
      out.warnings.push_back(std::string("backend error: ") + e.what());
    }
  }

  out.parse_status = candidate.parse_status;
  if (!out.backend_failed && candidate.parse_status != extract::ParseStatus::Full) {
    out.warnings.push_back(std::string("response parse ") + extract::to_string(candidate.parse_status));
  }
  out.prediction.cause = candidate.cause_text;
  out.prediction.effect = candidate.effect_text;
  out.cause_method = ground_field(out.prediction.cause, segment.text, "cause", options, out.warnings);
  out.effect_method = ground_field(out.prediction.effect, segment.text, "effect", options, out.warnings);
  return out;
}

std::vector<RowOutcome> predict_all(std::span<const corpus::Segment> segments,
                                    llm::CompletionClient* client, const PredictOptions& options) {
  std::vector<RowOutcome> results(segments.size());
  const std::size_t limit =
      client == nullptr ? 1 : static_cast<std::size_t>(client->config().concurrency_limit);
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(limit, segments.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < segments.size(); i = next++) {
      try {
        results[i] = predict_row(segments[i], client, options);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = segments.size();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace causal::pipeline
