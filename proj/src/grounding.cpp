#include <algorithm>
#include <cmath>
#include <vector>

#include "causal/extract.hpp"
#include "causal/text.hpp"

namespace causal::extract {
namespace {

// Whitespace-collapsed view of a string with a map back to raw offsets.
struct Collapsed {
  std::u32string chars;
  std::vector<std::size_t> raw_index;
};

Collapsed collapse_whitespace(std::u32string_view s, bool trim) {
  Collapsed out;
  bool in_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (text::is_space(s[i])) {
      if (!in_space) {
        out.chars.push_back(U' ');
        out.raw_index.push_back(i);
      }
      in_space = true;
    } else {
      out.chars.push_back(s[i]);
      out.raw_index.push_back(i);
      in_space = false;
    }
  }
  if (trim) {
    while (!out.chars.empty() && out.chars.back() == U' ') {
      out.chars.pop_back();
      out.raw_index.pop_back();
    }
    if (!out.chars.empty() && out.chars.front() == U' ') {
      out.chars.erase(out.chars.begin());
      out.raw_index.erase(out.raw_index.begin());
    }
  }
  return out;
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double normalized_distance(std::size_t distance, std::size_t len_a, std::size_t len_b) {
  const std::size_t denom = std::max(len_a, len_b);
  return denom == 0 ? 0.0 : static_cast<double>(distance) / static_cast<double>(denom);
}

GroundedSpan make_span(std::u32string_view source, std::u32string_view candidate,
                       std::size_t start, std::size_t end, MatchMethod method) {
  const auto matched = source.substr(start, end - start);
  GroundedSpan span;
  span.start = start;
  span.end = end;
  span.matched_text = text::encode_utf8(matched);
  span.method = method;
  span.score = method == MatchMethod::Exact
                   ? 0.0
                   : normalized_distance(levenshtein(candidate, matched), candidate.size(),
                                         matched.size());
  return span;
}

// Best fuzzy window in collapsed coordinates.
struct WindowMatch {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t distance = 0;
  std::size_t denom = 1;  // max(candidate length, window length)
};

// Orders by normalized distance (compared exactly), then start, then length.
bool better(const WindowMatch& a, const WindowMatch& b) {
  const auto lhs = static_cast<unsigned long long>(a.distance) * b.denom;
  const auto rhs = static_cast<unsigned long long>(b.distance) * a.denom;
  if (lhs != rhs) return lhs < rhs;
  if (a.start != b.start) return a.start < b.start;
  return a.length < b.length;
}

// For every start, one DP pass yields the distance from the candidate to
// every window length at once (last row of the candidate x window table).
std::optional<WindowMatch> best_window(std::u32string_view candidate, std::u32string_view source,
                                       const GroundingOptions& options) {
  const std::size_t m = candidate.size();
  const auto min_len = static_cast<std::size_t>(
      std::max(1.0, std::ceil(static_cast<double>(m) * (1.0 - options.window_slack) - 1e-9)));
  const auto max_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(m) * (1.0 + options.window_slack) + 1e-9));
  if (max_len < min_len || source.size() < min_len) return std::nullopt;

  // No window longer than max_len can be accepted with more than this many edits.
  const auto budget = static_cast<std::size_t>(
      std::floor(options.max_distance * static_cast<double>(std::max(m, max_len)) + 1e-9));

  std::optional<WindowMatch> best;
  std::vector<std::size_t> prev;
  std::vector<std::size_t> cur;
  for (std::size_t start = 0; start + min_len <= source.size(); ++start) {
    const std::size_t width = std::min(max_len, source.size() - start);
    const auto window = source.substr(start, width);
    prev.resize(width + 1);
    cur.resize(width + 1);
    for (std::size_t j = 0; j <= width; ++j) prev[j] = j;
    bool pruned = false;
    for (std::size_t i = 1; i <= m; ++i) {
      cur[0] = i;
      std::size_t row_min = cur[0];
      for (std::size_t j = 1; j <= width; ++j) {
        const std::size_t sub = prev[j - 1] + (candidate[i - 1] == window[j - 1] ? 0 : 1);
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        row_min = std::min(row_min, cur[j]);
      }
      std::swap(prev, cur);
      // Row minima never decrease, so this start cannot succeed any more.
      if (row_min > budget) {
        pruned = true;
        break;
      }
    }
    if (pruned) continue;
    for (std::size_t len = min_len; len <= width; ++len) {
      const WindowMatch match{start, len, prev[len], std::max(m, len)};
      if (!best || better(match, *best)) best = match;
    }
  }
  return best;
}

}  // namespace

const char* to_string(MatchMethod method) {
  switch (method) {
    case MatchMethod::Exact: return "Exact";
    case MatchMethod::CaseFold: return "CaseFold";
    case MatchMethod::WhitespaceNorm: return "WhitespaceNorm";
    case MatchMethod::Fuzzy: return "Fuzzy";
  }
  return "Exact";
}

std::optional<GroundedSpan> ground_span(std::string_view candidate_utf8, std::string_view source_utf8,
                                        const GroundingOptions& options) {
  if (candidate_utf8.empty()) throw GroundingError("cannot ground an empty candidate");

  const std::u32string candidate = text::decode_utf8(candidate_utf8);
  const std::u32string source = text::decode_utf8(source_utf8);

  if (auto pos = source.find(candidate); pos != std::u32string::npos) {
    return make_span(source, candidate, pos, pos + candidate.size(), MatchMethod::Exact);
  }

  const std::u32string folded_source = text::fold_case(source);
  const std::u32string folded_candidate = text::fold_case(candidate);
  if (auto pos = folded_source.find(folded_candidate); pos != std::u32string::npos) {
    return make_span(source, candidate, pos, pos + candidate.size(), MatchMethod::CaseFold);
  }

  const Collapsed src = collapse_whitespace(source, /*trim=*/false);
  const Collapsed cand = collapse_whitespace(candidate, /*trim=*/true);
  if (cand.chars.empty()) return std::nullopt;

  auto map_back = [&](std::size_t start, std::size_t length, MatchMethod method) {
    const std::size_t raw_start = src.raw_index[start];
    const std::size_t raw_end = src.raw_index[start + length - 1] + 1;
    return make_span(source, candidate, raw_start, raw_end, method);
  };

  if (auto pos = src.chars.find(cand.chars); pos != std::u32string::npos) {
    return map_back(pos, cand.chars.size(), MatchMethod::WhitespaceNorm);
  }
  const std::u32string folded_src = text::fold_case(src.chars);
  const std::u32string folded_cand = text::fold_case(cand.chars);
  if (auto pos = folded_src.find(folded_cand); pos != std::u32string::npos) {
    return map_back(pos, cand.chars.size(), MatchMethod::WhitespaceNorm);
  }

  const auto window = best_window(folded_cand, folded_src, options);
  if (!window) return std::nullopt;
  const double score = normalized_distance(window->distance, folded_cand.size(), window->length);
  if (score > options.max_distance + 1e-12) return std::nullopt;
  GroundedSpan span = map_back(window->start, window->length, MatchMethod::Fuzzy);
  // Report the distance the search minimized (case- and whitespace-insensitive).
  span.score = score;
  return span;
}

}  // namespace causal::extract
