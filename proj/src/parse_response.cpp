#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/extract.hpp"
#include "causal/text.hpp"

namespace causal::extract {
namespace {

enum class Key { Cause, Effect };

struct Marker {
  Key key;
  std::size_t start;        // first character of the key (or its quote)
  std::size_t value_start;  // just past the ':'
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool istarts_with(std::string_view s, std::size_t pos, std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  return text::iequals(s.substr(pos, word.size()), word);
}

std::size_t skip_spaces(std::string_view s, std::size_t pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  return pos;
}

// Matches `'Cause':`, `"effect" :` (quoted) or `Cause:` (bare, word-bounded).
std::optional<Marker> marker_at(std::string_view s, std::size_t pos, bool quoted) {
  for (auto [key, word] : {std::pair{Key::Cause, std::string_view("cause")},
                           std::pair{Key::Effect, std::string_view("effect")}}) {
    std::size_t p = pos;
    char quote = 0;
    if (quoted) {
      if (p >= s.size() || (s[p] != '\'' && s[p] != '"')) return std::nullopt;
      quote = s[p++];
    } else if (p > 0 && is_word_char(s[p - 1])) {
      return std::nullopt;
    }
    if (!istarts_with(s, p, word)) continue;
    p += word.size();
    if (quoted) {
      if (p >= s.size() || s[p] != quote) continue;
      ++p;
    } else if (p < s.size() && is_word_char(s[p])) {
      continue;
    }
    p = skip_spaces(s, p);
    if (p < s.size() && s[p] == ':') return Marker{key, pos, p + 1};
  }
  return std::nullopt;
}

std::vector<Marker> find_markers(std::string_view s, bool quoted) {
  std::vector<Marker> markers;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (auto m = marker_at(s, i, quoted)) {
      markers.push_back(*m);
      i = m->value_start - 1;
    }
  }
  return markers;
}

std::string unescape_single_quoted(std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size() && (body[i + 1] == '\'' || body[i + 1] == '\\')) {
      out.push_back(body[++i]);
    } else {
      out.push_back(body[i]);
    }
  }
  return out;
}

// Strips separators and one level of quoting from a raw value region.
std::string clean_value(std::string_view v) {
  v = text::trim(v);
  if (v.ends_with(',')) v = text::trim(v.substr(0, v.size() - 1));
  if (v == "null" || v == "None") return {};
  if (v.size() >= 2) {
    const char q = v.front();
    if ((q == '\'' || q == '"' || q == '`') && v.back() == q) {
      if (q == '"') {
        try {
          return nlohmann::json::parse(v).get<std::string>();
        } catch (const nlohmann::json::exception&) {
          return std::string(v.substr(1, v.size() - 2));
        }
      }
      if (q == '\'') return unescape_single_quoted(v.substr(1, v.size() - 2));
      return std::string(v.substr(1, v.size() - 2));
    }
  }
  return std::string(v);
}

struct Fields {
  std::optional<std::string> cause;
  std::optional<std::string> effect;

  bool any() const { return (cause && !cause->empty()) || (effect && !effect->empty()); }
};

Fields read_keyed_values(std::string_view region) {
  auto markers = find_markers(region, /*quoted=*/true);
  if (markers.empty()) markers = find_markers(region, /*quoted=*/false);
  Fields fields;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const auto& m = markers[i];
    auto& slot = m.key == Key::Cause ? fields.cause : fields.effect;
    if (slot) continue;
    const std::size_t end = i + 1 < markers.size() ? markers[i + 1].start : region.size();
    slot = clean_value(region.substr(m.value_start, end - m.value_start));
  }
  return fields;
}

// First balanced {...} block, or the tail from an unclosed '{'.
std::optional<std::string_view> find_block(std::string_view raw, bool& balanced) {
  const auto open = raw.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  for (std::size_t i = open; i < raw.size(); ++i) {
    if (raw[i] == '{') ++depth;
    if (raw[i] == '}' && --depth == 0) {
      balanced = true;
      return raw.substr(open, i - open + 1);
    }
  }
  balanced = false;
  return raw.substr(open);
}

// Reads a quoted string starting at s[pos] (the quote). Single-quoted bodies
// honour \' and \\; double-quoted bodies follow JSON escapes.
std::optional<std::string> read_quoted(std::string_view s, std::size_t& pos) {
  const std::size_t open = pos;
  const char q = s[open];
  std::size_t i = open + 1;
  while (i < s.size() && s[i] != q) i += (s[i] == '\\') ? 2 : 1;
  if (i >= s.size()) return std::nullopt;
  pos = i + 1;
  if (q == '\'') return unescape_single_quoted(s.substr(open + 1, i - open - 1));
  try {
    return nlohmann::json::parse(s.substr(open, pos - open)).get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::size_t skip_ws(std::string_view s, std::size_t pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}

// Whole-block parse of a dict literal whose keys and values are all quoted
// (null/None allowed as values). Succeeds only on well-formed input, which
// includes everything serialize_candidate writes.
std::optional<Fields> parse_dict_literal(std::string_view s, std::size_t open, std::size_t& close) {
  std::size_t p = skip_ws(s, open + 1);
  Fields fields;
  bool first = true;
  while (true) {
    if (p < s.size() && s[p] == '}') break;
    if (!first) {
      if (p >= s.size() || s[p] != ',') return std::nullopt;
      p = skip_ws(s, p + 1);
      if (p < s.size() && s[p] == '}') break;
    }
    first = false;
    if (p >= s.size() || (s[p] != '\'' && s[p] != '"')) return std::nullopt;
    const auto key = read_quoted(s, p);
    if (!key) return std::nullopt;
    p = skip_ws(s, p);
    if (p >= s.size() || s[p] != ':') return std::nullopt;
    p = skip_ws(s, p + 1);
    std::optional<std::string> value;
    if (p < s.size() && (s[p] == '\'' || s[p] == '"')) {
      value = read_quoted(s, p);
      if (!value) return std::nullopt;
    } else if (s.substr(p, 4) == "null" || s.substr(p, 4) == "None") {
      value = std::string();
      p += 4;
    } else {
      return std::nullopt;
    }
    p = skip_ws(s, p);
    std::optional<std::string>* slot = nullptr;
    if (text::iequals(text::trim(*key), "cause")) slot = &fields.cause;
    if (text::iequals(text::trim(*key), "effect")) slot = &fields.effect;
    if (slot && !*slot) *slot = std::move(*value);
  }
  if (!fields.cause && !fields.effect) return std::nullopt;
  close = p;
  return fields;
}

std::string_view strip_line_decoration(std::string_view line) {
  std::size_t p = 0;
  while (p < line.size() && std::string_view(" \t-*#>{'\"`").find(line[p]) != std::string_view::npos) {
    ++p;
  }
  return line.substr(p);
}

// `Cause: ...` / `**Effect:** ...` style answers, one field per line.
Fields scan_line_prefixes(std::string_view raw, std::string& excerpt) {
  Fields fields;
  std::istringstream lines{std::string(raw)};
  std::string line;
  while (std::getline(lines, line)) {
    const auto body = strip_line_decoration(line);
    for (auto [key, word] : {std::pair{Key::Cause, std::string_view("cause")},
                             std::pair{Key::Effect, std::string_view("effect")}}) {
      if (!istarts_with(body, 0, word)) continue;
      std::size_t p = word.size();
      while (p < body.size() && (body[p] == '*' || body[p] == '\'' || body[p] == '"')) ++p;
      p = skip_spaces(body, p);
      if (p >= body.size() || body[p] != ':') continue;
      ++p;
      while (p < body.size() && body[p] == '*') ++p;
      auto& slot = key == Key::Cause ? fields.cause : fields.effect;
      if (slot) continue;
      slot = clean_value(body.substr(p));
      if (!excerpt.empty()) excerpt.push_back('\n');
      excerpt.append(text::trim(line));
    }
  }
  return fields;
}

ExtractionCandidate make_candidate(const Fields& f, std::string excerpt) {
  ExtractionCandidate c;
  c.cause_text = f.cause.value_or("");
  c.effect_text = f.effect.value_or("");
  const bool has_cause = !text::trim(c.cause_text).empty();
  const bool has_effect = !text::trim(c.effect_text).empty();
  if (has_cause && has_effect) {
    c.parse_status = ParseStatus::Full;
  } else if (has_cause || has_effect) {
    c.parse_status = ParseStatus::Partial;
  } else {
    c.parse_status = ParseStatus::Failed;
    c.cause_text.clear();
    c.effect_text.clear();
  }
  c.raw_excerpt = std::move(excerpt);
  return c;
}

}  // namespace

const char* to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Full: return "Full";
    case ParseStatus::Partial: return "Partial";
    case ParseStatus::Failed: return "Failed";
  }
  return "Failed";
}

ExtractionCandidate parse_response(std::string_view raw) {
  for (auto open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    std::size_t close = 0;
    if (auto fields = parse_dict_literal(raw, open, close)) {
      return make_candidate(*fields, std::string(raw.substr(open, close - open + 1)));
    }
  }
  bool balanced = false;
  if (auto block = find_block(raw, balanced)) {
    auto inner = block->substr(1);
    if (balanced) inner.remove_suffix(1);
    const Fields fields = read_keyed_values(inner);
    if (fields.any()) return make_candidate(fields, std::string(*block));
  }
  std::string excerpt;
  const Fields fields = scan_line_prefixes(raw, excerpt);
  if (!fields.any()) excerpt.clear();
  return make_candidate(fields, std::move(excerpt));
}

std::string serialize_candidate(std::string_view cause, std::string_view effect) {
  auto quote = [](std::string& out, std::string_view v) {
    out.push_back('\'');
    for (char c : v) {
      if (c == '\\' || c == '\'') out.push_back('\\');
      out.push_back(c);
    }
    out.push_back('\'');
  };
  std::string out = "{'Cause': ";
  quote(out, cause);
  out.append(", 'Effect': ");
  quote(out, effect);
  out.append("}");
  return out;
}

}  // namespace causal::extract
