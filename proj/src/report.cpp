#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causal/evalkit.hpp"

namespace causal::evalkit {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* label_name(std::size_t k) {
  static constexpr const char* kNames[] = {"C", "E", "O"};
  return kNames[k];
}

void write_markdown(std::ostream& out, const EvalReport& report,
                    std::span<const std::pair<std::string, EvalReport>> runs, int digits) {
  out << "| Submission | Precision | Recall | F1 | Exact Match |\n";
  out << "|:-----------|----------:|-------:|---:|------------:|\n";
  for (const auto& [label, run] : runs) {
    out << "| " << label << " | " << fixed(run.precision, digits) << " | "
        << fixed(run.recall, digits) << " | " << fixed(run.f1, digits) << " | "
        << fixed(run.exact_match, digits) << " |\n";
  }

  out << "\n### Per-class (" << to_string(report.metric) << ")\n\n";
  out << "| Label | Precision | Recall | F1 | Support |\n";
  out << "|:------|----------:|-------:|---:|--------:|\n";
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& c = report.per_class[k];
    out << "| " << label_name(k) << " | " << fixed(c.precision, digits) << " | "
        << fixed(c.recall, digits) << " | " << fixed(c.f1, digits) << " | " << c.support << " |\n";
  }

  out << "\n### Diagnostics\n\n";
  out << "| Count | Value |\n";
  out << "|:------|------:|\n";
  const std::pair<const char*, std::size_t> counts[] = {
      {"segments", report.n_segments},
      {"tokens", report.n_tokens},
      {"parse failed", report.n_parse_failed},
      {"not grounded", report.n_not_grounded},
      {"overflow (cause)", report.n_overflow_cause},
      {"overflow (effect)", report.n_overflow_effect},
      {"swapped", report.n_swapped},
      {"label conflicts", report.n_label_conflicts},
  };
  for (const auto& [name, value] : counts) out << "| " << name << " | " << value << " |\n";
}

}  // namespace

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& c = r.per_class[k];
    per_class[label_name(k)] = {
        {"precision", c.precision}, {"recall", c.recall},       {"f1", c.f1},
        {"support", c.support},     {"predicted", c.predicted}, {"true_positive", c.true_positive},
    };
  }
  j = {
      {"metric", to_string(r.metric)},
      {"weighted", {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}}},
      {"exact_match", r.exact_match},
      {"per_class", per_class},
      {"counts",
       {
           {"n_segments", r.n_segments},
           {"n_tokens", r.n_tokens},
           {"n_parse_failed", r.n_parse_failed},
           {"n_not_grounded", r.n_not_grounded},
           {"n_overflow_cause", r.n_overflow_cause},
           {"n_overflow_effect", r.n_overflow_effect},
           {"n_swapped", r.n_swapped},
           {"n_label_conflicts", r.n_label_conflicts},
       }},
  };
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  try {
    const auto mode = parse_metric_mode(j.at("metric").get<std::string>());
    if (!mode) throw EvalError(EvalError::Kind::BadReport, "unknown metric mode");
    r.metric = *mode;
    const auto& w = j.at("weighted");
    w.at("precision").get_to(r.precision);
    w.at("recall").get_to(r.recall);
    w.at("f1").get_to(r.f1);
    j.at("exact_match").get_to(r.exact_match);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& c = j.at("per_class").at(label_name(k));
      auto& out = r.per_class[k];
      c.at("precision").get_to(out.precision);
      c.at("recall").get_to(out.recall);
      c.at("f1").get_to(out.f1);
      c.at("support").get_to(out.support);
      c.at("predicted").get_to(out.predicted);
      c.at("true_positive").get_to(out.true_positive);
    }
    const auto& n = j.at("counts");
    n.at("n_segments").get_to(r.n_segments);
    n.at("n_tokens").get_to(r.n_tokens);
    n.at("n_parse_failed").get_to(r.n_parse_failed);
    n.at("n_not_grounded").get_to(r.n_not_grounded);
    n.at("n_overflow_cause").get_to(r.n_overflow_cause);
    n.at("n_overflow_effect").get_to(r.n_overflow_effect);
    n.at("n_swapped").get_to(r.n_swapped);
    n.at("n_label_conflicts").get_to(r.n_label_conflicts);
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(EvalError::Kind::BadReport, std::string("malformed report json: ") + e.what());
  }
}

std::string render_report(const EvalReport& report,
                          std::span<const std::pair<std::string, EvalReport>> runs,
                          ReportFormat format, const RenderOptions& options) {
  if (format == ReportFormat::Json) {
    nlohmann::json j;
    j["report"] = report;
    j["runs"] = nlohmann::json::array();
    for (const auto& [label, run] : runs) j["runs"].push_back({{"label", label}, {"report", run}});
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  write_markdown(out, report, runs, options.digits);
  return out.str();
}

}  // namespace causal::evalkit
