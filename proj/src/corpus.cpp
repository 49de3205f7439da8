#include "causal/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "causal/text.hpp"

namespace causal::corpus {
namespace {

constexpr char kDelimiter = ';';
constexpr char kQuote = '"';

struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
  bool unterminated_quote = false;
};

// Splits the input into records. Quoted fields may span lines; a quote that
// is never closed, or one whose closing quote is followed by more text, is
// read back as a literal character instead.
class RecordReader {
 public:
  explicit RecordReader(std::string data) : data_(std::move(data)) {
    if (data_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  bool next(Record& out) {
    while (pos_ < data_.size()) {
      out = Record{};
      out.line = line_;
      const std::size_t record_start = pos_;
      const std::size_t line_at_start = line_;
      if (!read_record(out, /*allow_quotes=*/true)) {
        pos_ = record_start;
        line_ = line_at_start;
        out = Record{};
        out.line = line_;
        out.unterminated_quote = true;
        read_record(out, /*allow_quotes=*/false);
      }
      if (is_blank(out)) continue;
      return true;
    }
    return false;
  }

 private:
  static bool is_blank(const Record& r) {
    return r.fields.size() == 1 && text::trim(r.fields.front()).empty();
  }

  bool at_field_end(std::size_t p) const {
    return p >= data_.size() || data_[p] == kDelimiter || data_[p] == '\n' ||
           (data_[p] == '\r' && (p + 1 >= data_.size() || data_[p + 1] == '\n'));
  }

  // Returns false when a quoted field runs off the end of the input.
  bool read_record(Record& rec, bool allow_quotes) {
    for (;;) {
      std::string field;
      if (allow_quotes && pos_ < data_.size() && data_[pos_] == kQuote) {
        const std::size_t field_start = pos_;
        const std::size_t line_at_field = line_;
        if (!read_quoted(field)) return false;
        if (!at_field_end(pos_)) {
          pos_ = field_start;
          line_ = line_at_field;
          field.clear();
          read_plain(field);
        }
      } else {
        read_plain(field);
      }
      rec.fields.push_back(std::move(field));

      if (pos_ >= data_.size()) return true;
      if (data_[pos_] == kDelimiter) {
        ++pos_;
        if (pos_ < data_.size() && data_[pos_] == ' ') ++pos_;
        continue;
      }
      if (data_[pos_] == '\r') ++pos_;
      if (pos_ < data_.size() && data_[pos_] == '\n') {
        ++pos_;
        ++line_;
      }
      return true;
    }
  }

  void read_plain(std::string& field) {
    while (!at_field_end(pos_)) field.push_back(data_[pos_++]);
  }

  bool read_quoted(std::string& field) {
    ++pos_;  // opening quote
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == kQuote) {
        if (pos_ + 1 < data_.size() && data_[pos_ + 1] == kQuote) {
          field.push_back(kQuote);
          pos_ += 2;
          continue;
        }
        ++pos_;
        return true;
      }
      if (c == '\n') ++line_;
      field.push_back(c);
      ++pos_;
    }
    return false;
  }

  std::string data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Columns {
  std::size_t count = 0;
  std::size_t index = 0;
  std::optional<std::size_t> text;
  std::optional<std::size_t> cause;
  std::optional<std::size_t> effect;
};

Columns read_header(RecordReader& reader) {
  Record header;
  if (!reader.next(header)) {
    throw CorpusError(CorpusError::Kind::MissingHeader, "input is empty; expected a header row");
  }
  if (!text::iequals(text::trim(header.fields.front()), "Index")) {
    throw CorpusError(CorpusError::Kind::MissingHeader,
                      "first row is not a header starting with 'Index'");
  }
  Columns cols;
  cols.count = header.fields.size();
  for (std::size_t i = 1; i < header.fields.size(); ++i) {
    const auto name = text::trim(header.fields[i]);
    if (text::iequals(name, "Text")) cols.text = i;
    else if (text::iequals(name, "Cause")) cols.cause = i;
    else if (text::iequals(name, "Effect")) cols.effect = i;
  }
  return cols;
}

ParseWarning make_warning(WarningKind kind, std::size_t line, std::string message) {
  return ParseWarning{kind, line, std::move(message)};
}

// Shared row loop: checks column counts and quoting, hands good rows to `emit`.
template <typename Emit>
std::vector<ParseWarning> read_rows(RecordReader& reader, const Columns& cols, Emit emit,
                                    std::size_t& n_rows) {
  std::vector<ParseWarning> warnings;
  Record rec;
  while (reader.next(rec)) {
    ++n_rows;
    if (rec.unterminated_quote) {
      warnings.push_back(make_warning(WarningKind::UnterminatedQuote, rec.line,
                                      "unterminated quote; field read literally"));
    }
    if (rec.fields.size() != cols.count) {
      std::ostringstream msg;
      msg << "expected " << cols.count << " columns, found " << rec.fields.size();
      warnings.push_back(make_warning(WarningKind::WrongColumnCount, rec.line, msg.str()));
      continue;
    }
    if (auto w = emit(rec)) warnings.push_back(std::move(*w));
  }
  return warnings;
}

}  // namespace

const char* to_string(WarningKind kind) {
  switch (kind) {
    case WarningKind::WrongColumnCount: return "WrongColumnCount";
    case WarningKind::EmptyText: return "EmptyText";
    case WarningKind::EmptyGoldField: return "EmptyGoldField";
    case WarningKind::UnterminatedQuote: return "UnterminatedQuote";
  }
  return "Unknown";
}

ParsedCorpus parse_corpus(std::istream& in, bool has_gold) {
  RecordReader reader(slurp(in));
  const Columns cols = read_header(reader);
  if (!cols.text) {
    throw CorpusError(CorpusError::Kind::MissingHeader, "header has no 'Text' column");
  }
  if (has_gold && (!cols.cause || !cols.effect)) {
    throw CorpusError(CorpusError::Kind::MissingHeader,
                      "header lacks 'Cause'/'Effect' columns required for gold data");
  }

  ParsedCorpus out;
  std::size_t n_rows = 0;
  auto emit = [&](Record& rec) -> std::optional<ParseWarning> {
    Segment seg;
    seg.id = std::move(rec.fields[cols.index]);
    seg.text = std::move(rec.fields[*cols.text]);
    if (text::trim(seg.text).empty()) {
      return make_warning(WarningKind::EmptyText, rec.line, "row '" + seg.id + "' has empty text");
    }
    if (has_gold) {
      GoldPair gold{std::move(rec.fields[*cols.cause]), std::move(rec.fields[*cols.effect])};
      if (text::trim(gold.cause).empty() || text::trim(gold.effect).empty()) {
        return make_warning(WarningKind::EmptyGoldField, rec.line,
                            "row '" + seg.id + "' has an empty cause or effect");
      }
      seg.gold = std::move(gold);
    }
    out.segments.push_back(std::move(seg));
    return std::nullopt;
  };
  out.warnings = read_rows(reader, cols, emit, n_rows);

  if (n_rows > 0 && out.segments.empty()) {
    throw CorpusError(CorpusError::Kind::NoParsableRows,
                      "none of the " + std::to_string(n_rows) + " data rows could be parsed");
  }
  return out;
}

ParsedCorpus load_corpus(const std::filesystem::path& path, bool has_gold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Io, "cannot open " + path.string());
  return parse_corpus(in, has_gold);
}

ParsedPredictions parse_predictions(std::istream& in) {
  RecordReader reader(slurp(in));
  const Columns cols = read_header(reader);
  if (!cols.cause || !cols.effect) {
    throw CorpusError(CorpusError::Kind::MissingHeader,
                      "predictions header lacks 'Cause'/'Effect' columns");
  }

  ParsedPredictions out;
  std::size_t n_rows = 0;
  auto emit = [&](Record& rec) -> std::optional<ParseWarning> {
    Prediction p;
    p.id = std::move(rec.fields[cols.index]);
    if (cols.text) p.text = std::move(rec.fields[*cols.text]);
    p.cause = std::move(rec.fields[*cols.cause]);
    p.effect = std::move(rec.fields[*cols.effect]);
    out.predictions.push_back(std::move(p));
    return std::nullopt;
  };
  out.warnings = read_rows(reader, cols, emit, n_rows);

  if (n_rows > 0 && out.predictions.empty()) {
    throw CorpusError(CorpusError::Kind::NoParsableRows,
                      "none of the " + std::to_string(n_rows) + " prediction rows could be parsed");
  }
  return out;
}

ParsedPredictions load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Io, "cannot open " + path.string());
  return parse_predictions(in);
}

namespace {

void write_field(std::ostream& out, const std::string& field) {
  const bool needs_quotes = field.find_first_of(";\"\r\n") != std::string::npos;
  if (!needs_quotes) {
    out << field;
    return;
  }
  out << kQuote;
  for (char c : field) {
    if (c == kQuote) out << kQuote;
    out << c;
  }
  out << kQuote;
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const Prediction> rows) {
  out << "Index; Text; Cause; Effect\n";
  for (const auto& row : rows) {
    write_field(out, row.id);
    out << "; ";
    write_field(out, row.text);
    out << "; ";
    write_field(out, row.cause);
    out << "; ";
    write_field(out, row.effect);
    out << '\n';
  }
}

Prediction gold_as_prediction(const Segment& segment) {
  Prediction p{segment.id, segment.text, {}, {}};
  if (segment.gold) {
    p.cause = segment.gold->cause;
    p.effect = segment.gold->effect;
  }
  return p;
}

ValidationRecord validate_segment(const Segment& segment) {
  if (!segment.gold) {
    throw CorpusError(CorpusError::Kind::NoGold, "segment '" + segment.id + "' has no gold pair");
  }
  return ValidationRecord{
      segment.text.find(segment.gold->cause) != std::string::npos,
      segment.text.find(segment.gold->effect) != std::string::npos,
  };
}

namespace {

class LengthAccumulator {
 public:
  void add(std::size_t n) {
    sum_ += n;
    min_ = std::min(min_, n);
    max_ = std::max(max_, n);
    ++count_;
  }

  LengthSummary summary() const {
    return LengthSummary{static_cast<double>(sum_) / static_cast<double>(count_), min_, max_};
  }

 private:
  std::size_t sum_ = 0;
  std::size_t min_ = std::numeric_limits<std::size_t>::max();
  std::size_t max_ = 0;
  std::size_t count_ = 0;
};

}  // namespace

DatasetStats compute_stats(std::span<const Segment> segments) {
  if (segments.empty()) {
    throw CorpusError(CorpusError::Kind::EmptyCorpus, "cannot compute statistics of an empty corpus");
  }
  DatasetStats stats;
  stats.n_documents = segments.size();

  std::unordered_set<std::string_view> distinct;
  LengthAccumulator docs;
  LengthAccumulator causes;
  LengthAccumulator effects;
  bool all_gold = true;
  for (const auto& seg : segments) {
    distinct.insert(seg.text);
    docs.add(text::count_tokens(seg.text));
    if (seg.gold) {
      causes.add(text::count_tokens(seg.gold->cause));
      effects.add(text::count_tokens(seg.gold->effect));
    } else {
      all_gold = false;
    }
  }
  stats.n_duplicates = segments.size() - distinct.size();
  stats.doc_len = docs.summary();
  if (all_gold) {
    stats.cause_len = causes.summary();
    stats.effect_len = effects.summary();
  }
  return stats;
}

}  // namespace causal::corpus
