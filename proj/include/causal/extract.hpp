#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace causal::extract {

enum class ParseStatus { Full, Partial, Failed };

const char* to_string(ParseStatus status);

// Cause/effect strings recovered from a raw model answer.
// Full: both non-empty. Partial: exactly one. Failed: neither.
struct ExtractionCandidate {
  std::string cause_text;
  std::string effect_text;
  ParseStatus parse_status = ParseStatus::Failed;
  std::string raw_excerpt;

  bool operator==(const ExtractionCandidate&) const = default;
};

// Never throws. Looks for the first balanced {...} block and reads the
// Cause/Effect keys from it (keys case-insensitive, values single- or
// double-quoted or bare); falls back to `Cause:` / `Effect:` line prefixes.
ExtractionCandidate parse_response(std::string_view raw);

// Canonical single-quoted form: {'Cause': '...', 'Effect': '...'}
std::string serialize_candidate(std::string_view cause, std::string_view effect);

enum class MatchMethod { Exact, CaseFold, WhitespaceNorm, Fuzzy };

const char* to_string(MatchMethod method);

// A verbatim source span. Offsets count Unicode scalar values, end exclusive.
// `score` is the character edit distance between candidate and matched text
// divided by the longer of the two lengths; 0 for Exact.
struct GroundedSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string matched_text;
  MatchMethod method = MatchMethod::Exact;
  double score = 0.0;

  bool operator==(const GroundedSpan&) const = default;
};

struct GroundingOptions {
  double max_distance = 0.35;  // fuzzy acceptance bound on the normalized distance
  double window_slack = 0.30;  // fuzzy windows span candidate length * (1 +/- slack)
};

class GroundingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cascade: exact, case-folded, whitespace-collapsed, then fuzzy window
// search. Returns nullopt when no window is within max_distance.
// Throws GroundingError for an empty candidate.
std::optional<GroundedSpan> ground_span(std::string_view candidate, std::string_view source,
                                        const GroundingOptions& options = {});

// Rule-based extractor keyed on explicit causal connectives, with a
// chronological fallback (first sentence causes the next one).
ExtractionCandidate cue_baseline(std::string_view text);

}  // namespace causal::extract
