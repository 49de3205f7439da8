#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace causal::corpus {

struct GoldPair {
  std::string cause;
  std::string effect;

  bool operator==(const GoldPair&) const = default;
};

// One corpus row. Text is stored exactly as read: no trimming, no
// normalization. The same text may appear on several rows with different
// gold pairs.
struct Segment {
  std::string id;
  std::string text;
  std::optional<GoldPair> gold;

  bool operator==(const Segment&) const = default;
};

// A row of a predictions file. Unlike Segment, cause and effect may be empty
// (failed parses and ungrounded answers are written as blanks).
struct Prediction {
  std::string id;
  std::string text;
  std::string cause;
  std::string effect;

  bool operator==(const Prediction&) const = default;
};

enum class WarningKind {
  WrongColumnCount,
  EmptyText,
  EmptyGoldField,
  UnterminatedQuote,
};

const char* to_string(WarningKind kind);

struct ParseWarning {
  WarningKind kind;
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::string message;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind { MissingHeader, NoParsableRows, NoGold, EmptyCorpus, Io };

  CorpusError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ParsedCorpus {
  std::vector<Segment> segments;
  std::vector<ParseWarning> warnings;
};

struct ParsedPredictions {
  std::vector<Prediction> predictions;
  std::vector<ParseWarning> warnings;
};

// Reads the `;`-delimited corpus format: header `Index; Text; Cause; Effect`
// (Cause/Effect optional when has_gold is false), `"` quoting, one optional
// space after each delimiter. Structural defects become warnings; throws
// CorpusError when the header is missing or no data row is usable.
ParsedCorpus parse_corpus(std::istream& in, bool has_gold);
ParsedCorpus load_corpus(const std::filesystem::path& path, bool has_gold);

// Same file format, but blank Cause/Effect fields are legal.
ParsedPredictions parse_predictions(std::istream& in);
ParsedPredictions load_predictions(const std::filesystem::path& path);

// Writes `Index; Text; Cause; Effect` rows, quoting fields only where the
// reader would otherwise misread them.
void write_predictions(std::ostream& out, std::span<const Prediction> rows);

Prediction gold_as_prediction(const Segment& segment);

struct ValidationRecord {
  bool cause_is_substring = false;
  bool effect_is_substring = false;

  bool ok() const { return cause_is_substring && effect_is_substring; }
};

// Case-sensitive containment of each gold string in the text. Throws
// CorpusError(NoGold) if the segment carries no gold pair.
ValidationRecord validate_segment(const Segment& segment);

struct LengthSummary {
  double avg = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

// Lengths are whitespace-token counts; duplicates are rows minus distinct
// byte-identical texts.
struct DatasetStats {
  std::size_t n_documents = 0;
  std::size_t n_duplicates = 0;
  LengthSummary doc_len;
  std::optional<LengthSummary> cause_len;   // only when every row has gold
  std::optional<LengthSummary> effect_len;
};

DatasetStats compute_stats(std::span<const Segment> segments);

}  // namespace causal::corpus
