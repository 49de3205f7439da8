#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Low-level text helpers shared by the corpus, grounding and scoring code.
// All character offsets used across the harness count Unicode scalar values,
// so source strings are decoded to UTF-32 before any offset arithmetic.
namespace causal::text {

// Decodes UTF-8. Malformed sequences decode to U+FFFD, one per bad byte.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view utf32);

// Number of scalar values in a UTF-8 string (same rules as decode_utf8).
std::size_t length_utf8(std::string_view utf8);

bool is_space(char32_t c);

// Simple one-to-one case folding (ASCII, Latin-1, Latin Extended-A, Greek,
// Cyrillic). Length preserving, so folded offsets equal raw offsets.
char32_t fold_case(char32_t c);
std::u32string fold_case(std::u32string_view s);

// Half-open range of scalar-value offsets.
struct Range {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const Range&) const = default;
};

// Maximal runs of non-whitespace characters.
std::vector<Range> whitespace_tokens(std::u32string_view s);
std::size_t count_tokens(std::string_view utf8);
std::vector<std::string> split_tokens(std::string_view utf8);

// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

// Case-insensitive ASCII comparison.
bool iequals(std::string_view a, std::string_view b);

}  // namespace causal::text
