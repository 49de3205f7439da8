#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causal/corpus.hpp"
#include "causal/extract.hpp"
#include "causal/llmclient.hpp"
#include "causal/prompt.hpp"

namespace causal::pipeline {

struct PredictOptions {
  prompt::PromptKind prompt_kind = prompt::PromptKind::CoT;
  bool ground = true;
  std::filesystem::path cache_dir;  // empty: no caching
  extract::GroundingOptions grounding;
};

struct RowOutcome {
  corpus::Prediction prediction;
  extract::ParseStatus parse_status = extract::ParseStatus::Failed;
  std::optional<extract::MatchMethod> cause_method;
  std::optional<extract::MatchMethod> effect_method;
  bool from_cache = false;
  bool backend_failed = false;
  std::vector<std::string> warnings;
};

// Runs one row end to end. Backend, parse and grounding failures leave the
// affected fields blank and add a warning; nothing is thrown for them.
RowOutcome predict_row(const corpus::Segment& segment, llm::CompletionClient* client,
                       const PredictOptions& options);

// Fans rows out over min(concurrency_limit, rows) workers (one worker for the
// cue baseline, client == nullptr). Results come back in corpus order.
std::vector<RowOutcome> predict_all(std::span<const corpus::Segment> segments,
                                    llm::CompletionClient* client, const PredictOptions& options);

}  // namespace causal::pipeline
