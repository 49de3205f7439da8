#include "causal/evalkit.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "causal/text.hpp"

namespace causal::evalkit {
namespace {

std::size_t overlap(const text::Range& a, const text::Range& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

using Confusion = std::array<std::array<std::size_t, 3>, 3>;  // [gold][pred]

std::size_t idx(TokenLabel l) { return static_cast<std::size_t>(l); }

std::array<ClassMetrics, 3> class_metrics(const Confusion& m) {
  std::array<ClassMetrics, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    auto& c = out[k];
    c.true_positive = m[k][k];
    for (std::size_t o = 0; o < 3; ++o) {
      c.support += m[k][o];
      c.predicted += m[o][k];
    }
    c.precision = c.predicted ? static_cast<double>(c.true_positive) / static_cast<double>(c.predicted) : 0.0;
    c.recall = c.support ? static_cast<double>(c.true_positive) / static_cast<double>(c.support) : 0.0;
    const double pr = c.precision + c.recall;
    c.f1 = pr > 0.0 ? 2.0 * c.precision * c.recall / pr : 0.0;
  }
  return out;
}

struct Weighted {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Weighted weighted(const std::array<ClassMetrics, 3>& classes) {
  std::size_t total = 0;
  Weighted w;
  for (const auto& c : classes) {
    total += c.support;
    w.precision += static_cast<double>(c.support) * c.precision;
    w.recall += static_cast<double>(c.support) * c.recall;
    w.f1 += static_cast<double>(c.support) * c.f1;
  }
  if (total == 0) return {};
  const auto t = static_cast<double>(total);
  return {w.precision / t, w.recall / t, w.f1 / t};
}

// Scalar-value range of the first occurrence of the trimmed needle.
std::optional<text::Range> locate(const std::u32string& haystack, std::string_view needle) {
  needle = text::trim(needle);
  if (needle.empty()) return std::nullopt;
  const auto n = text::decode_utf8(needle);
  const auto pos = haystack.find(n);
  if (pos == std::u32string::npos) return std::nullopt;
  return text::Range{pos, pos + n.size()};
}

std::optional<text::Range> locate_gold(const std::u32string& haystack, std::string_view text,
                                       std::string_view gold) {
  if (auto r = locate(haystack, gold)) return r;
  const auto trimmed = text::trim(gold);
  if (trimmed.empty()) return std::nullopt;
  if (auto g = extract::ground_span(trimmed, text)) return text::Range{g->start, g->end};
  return std::nullopt;
}

std::set<std::string> token_set(std::string_view s) {
  const auto tokens = text::split_tokens(s);
  return {tokens.begin(), tokens.end()};
}

std::string_view strip_trailing_punct(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
  }
  return text::trim(s);
}

}  // namespace

char to_char(TokenLabel label) {
  switch (label) {
    case TokenLabel::C: return 'C';
    case TokenLabel::E: return 'E';
    case TokenLabel::O: return 'O';
  }
  return 'O';
}

const char* to_string(MetricMode mode) {
  return mode == MetricMode::Pooled ? "pooled" : "per-row-macro";
}

std::optional<MetricMode> parse_metric_mode(std::string_view name) {
  if (name == "pooled") return MetricMode::Pooled;
  if (name == "per-row-macro") return MetricMode::PerRowMacro;
  return std::nullopt;
}

LabelResult label_tokens(std::string_view text, std::optional<text::Range> cause,
                         std::optional<text::Range> effect) {
  const auto decoded = text::decode_utf8(text);
  for (const auto& span : {cause, effect}) {
    if (span && (span->start > span->end || span->end > decoded.size())) {
      throw EvalError(EvalError::Kind::SpanOutOfBounds,
                      "span [" + std::to_string(span->start) + ", " + std::to_string(span->end) +
                          ") exceeds text of length " + std::to_string(decoded.size()));
    }
  }
  LabelResult out;
  for (const auto& tok : text::whitespace_tokens(decoded)) {
    const std::size_t in_cause = cause ? overlap(tok, *cause) : 0;
    const std::size_t in_effect = effect ? overlap(tok, *effect) : 0;
    if (in_cause > 0 && in_effect > 0) {
      ++out.conflicts;
      out.labels.push_back(in_effect > in_cause ? TokenLabel::E : TokenLabel::C);
    } else if (in_cause > 0) {
      out.labels.push_back(TokenLabel::C);
    } else if (in_effect > 0) {
      out.labels.push_back(TokenLabel::E);
    } else {
      out.labels.push_back(TokenLabel::O);
    }
  }
  return out;
}

std::vector<TokenLabel> token_labels(std::string_view text,
                                     const std::optional<extract::GroundedSpan>& cause,
                                     const std::optional<extract::GroundedSpan>& effect) {
  auto to_range = [](const std::optional<extract::GroundedSpan>& s) -> std::optional<text::Range> {
    if (!s) return std::nullopt;
    return text::Range{s->start, s->end};
  };
  return label_tokens(text, to_range(cause), to_range(effect)).labels;
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

bool detect_swap(const corpus::Prediction& pred, const corpus::Segment& gold) {
  if (!gold.gold || text::trim(pred.cause).empty() || text::trim(pred.effect).empty()) return false;
  const auto& g = *gold.gold;
  const double cause_own = token_jaccard(pred.cause, g.cause);
  const double cause_cross = token_jaccard(pred.cause, g.effect);
  const double effect_own = token_jaccard(pred.effect, g.effect);
  const double effect_cross = token_jaccard(pred.effect, g.cause);
  return cause_cross >= cause_own && effect_cross >= effect_own &&
         (cause_cross > cause_own || effect_cross > effect_own);
}

bool detect_overflow(std::string_view pred_text, std::string_view gold_text) {
  const auto pred = strip_trailing_punct(pred_text);
  const auto gold = strip_trailing_punct(gold_text);
  if (pred.empty() || gold.empty()) return false;
  return pred.size() > gold.size() && pred.find(gold) != std::string_view::npos;
}

EvalReport score(std::span<const corpus::Prediction> predictions,
                 std::span<const corpus::Segment> golds, const ScoreOptions& options) {
  // id -> queue of prediction indices, consumed in order of appearance.
  std::map<std::string, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < predictions.size(); ++i) by_id[predictions[i].id].push_back(i);
  std::map<std::string, std::size_t> consumed;

  EvalReport report;
  report.metric = options.metric;
  report.n_segments = golds.size();

  Confusion pooled{};
  Weighted macro_sum;
  std::size_t exact = 0;

  for (const auto& gold : golds) {
    if (!gold.gold) {
      throw EvalError(EvalError::Kind::MissingGold, "gold row '" + gold.id + "' has no cause/effect");
    }
    auto it = by_id.find(gold.id);
    auto& used = consumed[gold.id];
    if (it == by_id.end() || used >= it->second.size()) {
      throw EvalError(EvalError::Kind::IdMismatch, "no prediction for gold id '" + gold.id + "'");
    }
    const auto& pred = predictions[it->second[used++]];

    const auto decoded = text::decode_utf8(gold.text);
    const auto gold_labels = label_tokens(gold.text, locate_gold(decoded, gold.text, gold.gold->cause),
                                          locate_gold(decoded, gold.text, gold.gold->effect));
    const auto pred_cause = locate(decoded, pred.cause);
    const auto pred_effect = locate(decoded, pred.effect);
    const auto pred_labels = label_tokens(gold.text, pred_cause, pred_effect);

    const bool cause_blank = text::trim(pred.cause).empty();
    const bool effect_blank = text::trim(pred.effect).empty();
    if (cause_blank && effect_blank) ++report.n_parse_failed;
    if ((!cause_blank && !pred_cause) || (!effect_blank && !pred_effect)) ++report.n_not_grounded;
    report.n_label_conflicts += pred_labels.conflicts;

    Confusion row{};
    for (std::size_t t = 0; t < gold_labels.labels.size(); ++t) {
      ++row[idx(gold_labels.labels[t])][idx(pred_labels.labels[t])];
    }
    for (std::size_t g = 0; g < 3; ++g) {
      for (std::size_t p = 0; p < 3; ++p) pooled[g][p] += row[g][p];
    }
    report.n_tokens += gold_labels.labels.size();
    if (options.metric == MetricMode::PerRowMacro) {
      const auto w = weighted(class_metrics(row));
      macro_sum.precision += w.precision;
      macro_sum.recall += w.recall;
      macro_sum.f1 += w.f1;
    }

    if (text::trim(pred.cause) == text::trim(gold.gold->cause) &&
        text::trim(pred.effect) == text::trim(gold.gold->effect)) {
      ++exact;
    }
    if (detect_swap(pred, gold)) ++report.n_swapped;
    if (!cause_blank && detect_overflow(pred.cause, gold.gold->cause)) ++report.n_overflow_cause;
    if (!effect_blank && detect_overflow(pred.effect, gold.gold->effect)) ++report.n_overflow_effect;
  }

  for (const auto& [id, indices] : by_id) {
    if (consumed[id] != indices.size()) {
      throw EvalError(EvalError::Kind::IdMismatch, "prediction id '" + id + "' has no gold row");
    }
  }

  report.per_class = class_metrics(pooled);
  if (options.metric == MetricMode::Pooled) {
    const auto w = weighted(report.per_class);
    report.precision = w.precision;
    report.recall = w.recall;
    report.f1 = w.f1;
  } else if (!golds.empty()) {
    const auto n = static_cast<double>(golds.size());
    report.precision = macro_sum.precision / n;
    report.recall = macro_sum.recall / n;
    report.f1 = macro_sum.f1 / n;
  }
  report.exact_match = golds.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(golds.size());
  return report;
}

}  // namespace causal::evalkit
