#include <array>
#include <cctype>

#include "causal/extract.hpp"
#include "causal/text.hpp"

namespace causal::extract {
namespace {

struct Cue {
  std::string_view phrase;
  bool cause_follows;  // "X due to Y": Y is the cause
};

// Checked in order; the first cue present anywhere in the text wins.
constexpr std::array<Cue, 7> kCues = {{
    {"as a result of", true},
    {"due to", true},
    {"caused by", true},
    {"because of", true},
    {"because", true},
    {"led to", false},
    {"resulting in", false},
}};

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Case-insensitive, word-bounded search.
std::size_t find_cue(std::string_view haystack, std::string_view cue) {
  for (std::size_t i = 0; i + cue.size() <= haystack.size(); ++i) {
    if (!text::iequals(haystack.substr(i, cue.size()), cue)) continue;
    const bool left_ok = i == 0 || !is_alnum(haystack[i - 1]);
    const bool right_ok = i + cue.size() == haystack.size() || !is_alnum(haystack[i + cue.size()]);
    if (left_ok && right_ok) return i;
  }
  return std::string_view::npos;
}

// Index just past the sentence-final punctuation of the sentence starting at
// `from`, or npos when the text has no further boundary.
std::size_t sentence_end(std::string_view s, std::size_t from) {
  for (std::size_t i = from; i + 1 < s.size(); ++i) {
    if ((s[i] == '.' || s[i] == '!' || s[i] == '?') &&
        std::isspace(static_cast<unsigned char>(s[i + 1])) &&
        !text::trim(s.substr(i + 1)).empty()) {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

ExtractionCandidate finish(std::string_view cause, std::string_view effect, std::string_view excerpt) {
  ExtractionCandidate c;
  c.cause_text = std::string(text::trim(cause));
  c.effect_text = std::string(text::trim(effect));
  if (!c.cause_text.empty() && !c.effect_text.empty()) {
    c.parse_status = ParseStatus::Full;
  } else if (!c.cause_text.empty() || !c.effect_text.empty()) {
    c.parse_status = ParseStatus::Partial;
  } else {
    c.parse_status = ParseStatus::Failed;
  }
  c.raw_excerpt = std::string(excerpt);
  return c;
}

}  // namespace

ExtractionCandidate cue_baseline(std::string_view text) {
  for (const auto& cue : kCues) {
    const auto pos = find_cue(text, cue.phrase);
    if (pos == std::string_view::npos) continue;
    const auto before = text.substr(0, pos);
    const auto after = text.substr(pos + cue.phrase.size());
    return cue.cause_follows ? finish(after, before, cue.phrase) : finish(before, after, cue.phrase);
  }

  // No connective: the earlier sentence is taken as the cause of the next.
  const auto first = sentence_end(text, 0);
  if (first == std::string_view::npos) return finish(text, {}, {});
  const auto second = sentence_end(text, first);
  const auto effect = second == std::string_view::npos ? text.substr(first)
                                                       : text.substr(first, second - first);
  return finish(text.substr(0, first), effect, {});
}

}  // namespace causal::extract
