#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "causal/corpus.hpp"
#include "causal/extract.hpp"
#include "causal/text.hpp"

namespace causal::evalkit {

enum class TokenLabel { C, E, O };

inline constexpr std::array<TokenLabel, 3> kAllLabels = {TokenLabel::C, TokenLabel::E,
                                                        TokenLabel::O};

char to_char(TokenLabel label);

class EvalError : public std::runtime_error {
 public:
  enum class Kind { SpanOutOfBounds, IdMismatch, MissingGold, BadReport };

  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LabelResult {
  std::vector<TokenLabel> labels;  // one per whitespace token
  std::size_t conflicts = 0;       // tokens touched by both spans
};

// Labels each whitespace token by character overlap with the spans. A token
// touching both spans takes the larger overlap, C on ties. Span offsets are
// scalar-value offsets into `text`; throws SpanOutOfBounds otherwise.
LabelResult label_tokens(std::string_view text, std::optional<text::Range> cause,
                         std::optional<text::Range> effect);

std::vector<TokenLabel> token_labels(std::string_view text,
                                     const std::optional<extract::GroundedSpan>& cause,
                                     const std::optional<extract::GroundedSpan>& effect);

enum class MetricMode {
  Pooled,       // all rows' tokens in one confusion matrix
  PerRowMacro,  // weighted P/R/F1 per row, then averaged over rows
};

const char* to_string(MetricMode mode);
std::optional<MetricMode> parse_metric_mode(std::string_view name);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold tokens with this label
  std::size_t predicted = 0;  // predicted tokens with this label
  std::size_t true_positive = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct EvalReport {
  MetricMode metric = MetricMode::Pooled;
  std::array<ClassMetrics, 3> per_class{};  // indexed by TokenLabel
  double precision = 0.0;                   // support-weighted over C, E, O
  double recall = 0.0;
  double f1 = 0.0;
  double exact_match = 0.0;
  std::size_t n_segments = 0;
  std::size_t n_tokens = 0;
  std::size_t n_parse_failed = 0;
  std::size_t n_not_grounded = 0;  // non-empty predicted strings absent from the text
  std::size_t n_overflow_cause = 0;
  std::size_t n_overflow_effect = 0;
  std::size_t n_swapped = 0;
  std::size_t n_label_conflicts = 0;  // predicted tokens claimed by both spans

  const ClassMetrics& of(TokenLabel label) const {
    return per_class[static_cast<std::size_t>(label)];
  }

  bool operator==(const EvalReport&) const = default;
};

struct ScoreOptions {
  MetricMode metric = MetricMode::Pooled;
};

// Rows pair up by id (k-th occurrence with k-th occurrence); throws
// IdMismatch if either side has an id the other lacks.
EvalReport score(std::span<const corpus::Prediction> predictions,
                 std::span<const corpus::Segment> golds, const ScoreOptions& options = {});

// Both sides lean toward the crossed assignment: each predicted string is at
// least as close (token Jaccard) to the opposite gold string as to its own,
// strictly closer on at least one side. False if either prediction is blank.
bool detect_swap(const corpus::Prediction& pred, const corpus::Segment& gold);

// The prediction contains the whole gold string plus extra text. Trailing
// sentence punctuation is ignored on both sides.
bool detect_overflow(std::string_view pred_text, std::string_view gold_text);

double token_jaccard(std::string_view a, std::string_view b);

enum class ReportFormat { Json, Markdown };

struct RenderOptions {
  int digits = 3;
};

// Markdown: one table row per run (Precision/Recall/F1/Exact Match), then the
// per-class table and diagnostics of `report`. Json: see docs/report_schema.md.
std::string render_report(const EvalReport& report,
                          std::span<const std::pair<std::string, EvalReport>> runs,
                          ReportFormat format, const RenderOptions& options = {});

void to_json(nlohmann::json& j, const EvalReport& report);
void from_json(const nlohmann::json& j, EvalReport& report);

}  // namespace causal::evalkit
