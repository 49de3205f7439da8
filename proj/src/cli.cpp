#include "causal/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "causal/corpus.hpp"
#include "causal/evalkit.hpp"
#include "causal/llmclient.hpp"
#include "causal/pipeline.hpp"
#include "causal/prompt.hpp"
#include "causal/text.hpp"

namespace causal::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Thrown inside a subcommand to leave with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

void print_warnings(std::ostream& err, const fs::path& path,
                    const std::vector<corpus::ParseWarning>& warnings) {
  for (const auto& w : warnings) {
    err << "warning: " << path.string() << ":" << w.line << ": " << corpus::to_string(w.kind) << ": "
        << w.message << '\n';
  }
}

// Reads gold columns when the header has them, text only otherwise.
corpus::ParsedCorpus load_any(const fs::path& path) {
  try {
    return corpus::load_corpus(path, /*has_gold=*/true);
  } catch (const corpus::CorpusError& e) {
    if (e.kind() != corpus::CorpusError::Kind::MissingHeader) throw;
    return corpus::load_corpus(path, /*has_gold=*/false);
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

json length_json(const std::optional<corpus::LengthSummary>& s) {
  if (!s) return nullptr;
  return {{"avg", s->avg}, {"min", s->min}, {"max", s->max}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::string corpus;
  bool json = false;
};

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  corpus::ParsedCorpus parsed;
  try {
    parsed = load_any(args.corpus);
  } catch (const corpus::CorpusError& e) {
    throw Exit{kInputError, e.what()};
  }
  print_warnings(err, args.corpus, parsed.warnings);
  if (parsed.segments.empty()) throw Exit{kInputError, "corpus has no rows"};
  const auto stats = corpus::compute_stats(parsed.segments);

  if (args.json) {
    const json j = {
        {"n_documents", stats.n_documents}, {"n_duplicates", stats.n_duplicates},
        {"doc_len", length_json(stats.doc_len)}, {"cause_len", length_json(stats.cause_len)},
        {"effect_len", length_json(stats.effect_len)},
    };
    out << j.dump(2) << '\n';
    return kOk;
  }

  std::vector<std::pair<std::string, std::string>> rows = {
      {"# Documents", std::to_string(stats.n_documents)},
      {"# Duplicates", std::to_string(stats.n_duplicates)},
  };
  auto add_lengths = [&](const std::string& what, const std::optional<corpus::LengthSummary>& s) {
    rows.emplace_back("Avg " + what + " len", s ? fixed(s->avg, 2) : "--");
    rows.emplace_back("(Min, Max) " + what + " len",
                      s ? "(" + std::to_string(s->min) + ", " + std::to_string(s->max) + ")" : "--");
  };
  add_lengths("doc", stats.doc_len);
  add_lengths("cause", stats.cause_len);
  add_lengths("effect", stats.effect_len);
  std::size_t width = 0;
  for (const auto& [name, value] : rows) width = std::max(width, name.size());
  for (const auto& [name, value] : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << name << value << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string corpus;
  bool strict = false;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
  corpus::ParsedCorpus parsed;
  try {
    parsed = corpus::load_corpus(args.corpus, /*has_gold=*/true);
  } catch (const corpus::CorpusError& e) {
    throw Exit{kInputError, e.what()};
  }
  print_warnings(err, args.corpus, parsed.warnings);
  std::size_t bad = 0;
  for (const auto& seg : parsed.segments) {
    const auto v = corpus::validate_segment(seg);
    if (v.ok()) continue;
    ++bad;
    out << seg.id << "\tcause_is_substring=" << (v.cause_is_substring ? "true" : "false")
        << "\teffect_is_substring=" << (v.effect_is_substring ? "true" : "false") << '\n';
  }
  out << parsed.segments.size() << " rows checked, " << bad << " with gold outside the text\n";
  return (bad > 0 && args.strict) ? kInputError : kOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string corpus;
  std::string out;
  std::string gold;
  std::string script;
  std::string config_file;
  bool no_ground = false;
  std::string metric = "pooled";
  // Flag-level overrides; applied last.
  std::map<std::string, std::string> flags;
};

constexpr const char* kSettingKeys[] = {
    "backend",     "prompt",      "model",          "endpoint",   "temperature",
    "max_tokens",  "timeout",     "max_retries",    "concurrency", "cache_dir",
    "requests_per_second", "initial_backoff_ms",
};

std::map<std::string, std::string> default_settings() {
  return {
      {"backend", "mock-oracle"}, {"prompt", "cot"},      {"model", ""},
      {"endpoint", ""},           {"temperature", "0"},   {"max_tokens", "512"},
      {"timeout", "60"},          {"max_retries", "3"},   {"concurrency", "4"},
      {"cache_dir", ""},          {"requests_per_second", "0"}, {"initial_backoff_ms", "500"},
  };
}

// defaults < config file < CAUSAL_HARNESS_* env < flags
std::map<std::string, std::string> resolve_settings(const PredictArgs& args) {
  auto settings = default_settings();
  std::string config_path = args.config_file;
  if (config_path.empty()) {
    if (const char* env = std::getenv("CAUSAL_HARNESS_CONFIG")) config_path = env;
  }
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Exit{kInputError, "cannot open config file " + config_path};
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (auto& [k, v] : parse_config_text(text)) {
      if (!settings.contains(k)) throw Exit{kInputError, "unknown config key '" + k + "'"};
      settings[k] = v;
    }
  }
  for (const char* key : kSettingKeys) {
    std::string env_name = "CAUSAL_HARNESS_";
    for (const char* p = key; *p; ++p) env_name.push_back(static_cast<char>(std::toupper(*p)));
    if (const char* v = std::getenv(env_name.c_str())) settings[key] = v;
  }
  for (const auto& [k, v] : args.flags) settings[k] = v;
  return settings;
}

template <typename T>
T number(const std::map<std::string, std::string>& s, const std::string& key) {
  const auto& raw = s.at(key);
  std::istringstream in(raw);
  T value{};
  if (!(in >> value) || !(in >> std::ws).eof()) {
    throw Exit{kBackendError, "setting '" + key + "' is not a number: '" + raw + "'"};
  }
  return value;
}

std::vector<std::string> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Exit{kBackendError, "cannot open canned script " + path};
  try {
    return json::parse(in).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Exit{kBackendError, "canned script must be a JSON array of strings: " + std::string(e.what())};
  }
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  const auto settings = resolve_settings(args);

  corpus::ParsedCorpus parsed;
  try {
    parsed = load_any(args.corpus);
  } catch (const corpus::CorpusError& e) {
    throw Exit{kInputError, e.what()};
  }
  print_warnings(err, args.corpus, parsed.warnings);

  const auto kind = prompt::parse_kind(settings.at("prompt"));
  if (!kind) throw Exit{kInputError, "unknown prompt kind '" + settings.at("prompt") + "'"};
  const auto metric = evalkit::parse_metric_mode(args.metric);
  if (!metric) throw Exit{kInputError, "unknown metric '" + args.metric + "'"};

  const std::string backend_name = settings.at("backend");
  const bool use_cue = backend_name == "cue";
  std::optional<llm::ModelConfig> config;
  std::unique_ptr<llm::CompletionClient> client;
  if (!use_cue) {
    const auto backend = llm::parse_backend(backend_name);
    if (!backend) throw Exit{kBackendError, "unknown backend '" + backend_name + "'"};
    config.emplace();
    config->backend = *backend;
    if (!settings.at("model").empty()) config->model_name = settings.at("model");
    config->endpoint_url = settings.at("endpoint");
    config->temperature = number<double>(settings, "temperature");
    config->max_tokens = number<int>(settings, "max_tokens");
    config->timeout_seconds = number<double>(settings, "timeout");
    config->max_retries = number<int>(settings, "max_retries");
    config->concurrency_limit = number<int>(settings, "concurrency");
    config->requests_per_second = number<double>(settings, "requests_per_second");
    config->initial_backoff = std::chrono::milliseconds(number<long long>(settings, "initial_backoff_ms"));

    llm::OracleTable oracle;
    std::vector<std::string> script;
    if (*backend == llm::Backend::MockOracle) {
      const std::string gold_path = args.gold.empty() ? args.corpus : args.gold;
      try {
        const auto gold = corpus::load_corpus(gold_path, /*has_gold=*/true);
        oracle = llm::OracleTable::from_segments(gold.segments);
      } catch (const corpus::CorpusError& e) {
        throw Exit{kBackendError, "mock-oracle needs a gold corpus: " + std::string(e.what())};
      }
    } else if (*backend == llm::Backend::MockCanned) {
      if (args.script.empty()) throw Exit{kBackendError, "mock-canned needs --script"};
      script = load_script(args.script);
    }
    try {
      client = std::make_unique<llm::CompletionClient>(*config, std::move(oracle), std::move(script));
    } catch (const llm::LlmError& e) {
      throw Exit{kBackendError, e.what()};
    }
    client->set_warning_sink([&err](const std::string& msg) { err << "warning: " << msg << '\n'; });
  }

  pipeline::PredictOptions options;
  options.prompt_kind = *kind;
  options.ground = !args.no_ground;
  options.cache_dir = settings.at("cache_dir");

  std::vector<pipeline::RowOutcome> outcomes;
  try {
    outcomes = pipeline::predict_all(parsed.segments, client.get(), options);
  } catch (const llm::LlmError& e) {
    throw Exit{kBackendError, e.what()};
  }

  std::vector<corpus::Prediction> rows;
  std::size_t n_full = 0, n_partial = 0, n_failed = 0, n_backend = 0, n_cached = 0;
  for (const auto& o : outcomes) {
    rows.push_back(o.prediction);
    for (const auto& w : o.warnings) err << "warning: row " << o.prediction.id << ": " << w << '\n';
    n_backend += o.backend_failed;
    n_cached += o.from_cache;
    switch (o.parse_status) {
      case extract::ParseStatus::Full: ++n_full; break;
      case extract::ParseStatus::Partial: ++n_partial; break;
      case extract::ParseStatus::Failed: ++n_failed; break;
    }
  }

  const fs::path out_path = args.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  {
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Exit{kInputError, "cannot write " + out_path.string()};
    corpus::write_predictions(file, rows);
  }

  json manifest = {
      {"tool", "causal-harness"},
      {"tool_version", kToolVersion},
      {"timestamp", utc_timestamp()},
      {"corpus", args.corpus},
      {"prompt", prompt::to_string(*kind)},
      {"backend", backend_name},
      {"cache_dir", settings.at("cache_dir")},
      {"output", out_path.string()},
      {"grounding", !args.no_ground},
      {"metric", evalkit::to_string(*metric)},
      {"rows", rows.size()},
      {"summary",
       {{"full", n_full}, {"partial", n_partial}, {"failed", n_failed},
        {"backend_errors", n_backend}, {"cache_hits", n_cached}}},
  };
  if (config) {
    manifest["model_config"] = {
        {"backend", llm::to_string(config->backend)},
        {"model_name", config->model_name},
        {"endpoint_url", config->endpoint_url},
        {"temperature", config->temperature},
        {"max_tokens", config->max_tokens},
        {"timeout_seconds", config->timeout_seconds},
        {"max_retries", config->max_retries},
        {"concurrency_limit", config->concurrency_limit},
        {"requests_per_second", config->requests_per_second},
    };
  } else {
    manifest["model_config"] = nullptr;
  }
  {
    std::ofstream file(out_path.string() + ".manifest.json", std::ios::trunc);
    file << manifest.dump(2) << '\n';
  }

  out << "wrote " << rows.size() << " predictions to " << out_path.string() << " (full " << n_full
      << ", partial " << n_partial << ", failed " << n_failed << ", backend errors " << n_backend
      << ", cache hits " << n_cached << ")\n";
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string pred;
  std::string gold;
  std::string metric = "pooled";
  std::string label;
  std::string out;
  bool json = false;
  int digits = 3;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  const auto metric = evalkit::parse_metric_mode(args.metric);
  if (!metric) throw Exit{kInputError, "unknown metric '" + args.metric + "'"};

  corpus::ParsedPredictions preds;
  corpus::ParsedCorpus gold;
  try {
    preds = corpus::load_predictions(args.pred);
    gold = corpus::load_corpus(args.gold, /*has_gold=*/true);
  } catch (const corpus::CorpusError& e) {
    throw Exit{kInputError, e.what()};
  }
  print_warnings(err, args.pred, preds.warnings);
  print_warnings(err, args.gold, gold.warnings);

  evalkit::EvalReport report;
  try {
    report = evalkit::score(preds.predictions, gold.segments, {*metric});
  } catch (const evalkit::EvalError& e) {
    if (e.kind() == evalkit::EvalError::Kind::IdMismatch) throw Exit{kAlignmentError, e.what()};
    throw Exit{kInputError, e.what()};
  }

  const std::string label = args.label.empty() ? fs::path(args.pred).stem().string() : args.label;
  const std::vector<std::pair<std::string, evalkit::EvalReport>> runs = {{label, report}};
  const auto format = args.json ? evalkit::ReportFormat::Json : evalkit::ReportFormat::Markdown;
  const std::string rendered = evalkit::render_report(report, runs, format, {args.digits});
  out << rendered;
  if (!args.out.empty()) {
    std::ofstream file(args.out, std::ios::trunc);
    file << evalkit::render_report(report, runs, evalkit::ReportFormat::Json);
  }
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> inputs;
  bool json = false;
  int digits = 3;
};

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream&) {
  std::vector<std::pair<std::string, evalkit::EvalReport>> runs;
  for (const auto& path : args.inputs) {
    std::ifstream in(path);
    if (!in) throw Exit{kInputError, "cannot open " + path};
    try {
      const json j = json::parse(in);
      if (j.contains("runs")) {
        for (const auto& r : j.at("runs")) {
          runs.emplace_back(r.at("label").get<std::string>(), r.at("report").get<evalkit::EvalReport>());
        }
      } else {
        runs.emplace_back(fs::path(path).stem().string(), j.get<evalkit::EvalReport>());
      }
    } catch (const json::exception& e) {
      throw Exit{kInputError, path + ": " + e.what()};
    } catch (const evalkit::EvalError& e) {
      throw Exit{kInputError, path + ": " + e.what()};
    }
  }
  const evalkit::EvalReport primary = runs.empty() ? evalkit::EvalReport{} : runs.front().second;
  const auto format = args.json ? evalkit::ReportFormat::Json : evalkit::ReportFormat::Markdown;
  out << evalkit::render_report(primary, runs, format, {args.digits});
  return kOk;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key(text::trim(body.substr(0, eq)));
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = std::string(text::trim(body.substr(eq + 1)));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cause/effect span extraction harness", "causal-harness"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics");
  stats_cmd->add_option("corpus", stats.corpus, "Corpus file")->required();
  stats_cmd->add_flag("--json", stats.json, "Emit JSON");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "List rows whose gold is not a substring of the text");
  validate_cmd->add_option("corpus", validate.corpus, "Gold corpus file")->required();
  validate_cmd->add_flag("--strict", validate.strict, "Exit 2 when any row fails");

  PredictArgs predict;
  std::map<std::string, std::string> flag_values;
  auto* predict_cmd = app.add_subcommand("predict", "Run a backend over a corpus");
  predict_cmd->add_option("--corpus", predict.corpus, "Input corpus")->required();
  predict_cmd->add_option("--out", predict.out, "Predictions file to write")->required();
  predict_cmd->add_option("--gold", predict.gold, "Gold corpus for mock-oracle (default: --corpus)");
  predict_cmd->add_option("--script", predict.script, "JSON array of responses for mock-canned");
  predict_cmd->add_option("--config", predict.config_file, "key = value settings file");
  predict_cmd->add_flag("--no-ground", predict.no_ground, "Keep raw generated strings");
  predict_cmd->add_option("--metric", predict.metric, "Metric recorded in the manifest")
      ->check(CLI::IsMember({"pooled", "per-row-macro"}));
  const std::vector<std::pair<std::string, std::string>> setting_flags = {
      {"--backend", "backend"},         {"--prompt", "prompt"},
      {"--model", "model"},             {"--endpoint", "endpoint"},
      {"--temperature", "temperature"}, {"--max-tokens", "max_tokens"},
      {"--timeout", "timeout"},         {"--max-retries", "max_retries"},
      {"--concurrency", "concurrency"}, {"--cache-dir", "cache_dir"},
      {"--requests-per-second", "requests_per_second"},
      {"--initial-backoff-ms", "initial_backoff_ms"},
  };
  std::vector<CLI::Option*> setting_opts;
  for (const auto& [flag, key] : setting_flags) {
    setting_opts.push_back(predict_cmd->add_option(flag, flag_values[key]));
  }
  setting_opts[0]->check(CLI::IsMember({"remote", "mock-oracle", "mock-canned", "cue"}));
  setting_opts[1]->check(CLI::IsMember({"gen", "task", "cot"}));

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold");
  evaluate_cmd->add_option("--pred", evaluate.pred, "Predictions file")->required();
  evaluate_cmd->add_option("--gold", evaluate.gold, "Gold corpus")->required();
  evaluate_cmd->add_option("--metric", evaluate.metric, "pooled | per-row-macro")
      ->check(CLI::IsMember({"pooled", "per-row-macro"}));
  evaluate_cmd->add_option("--label", evaluate.label, "Row label (default: predictions file stem)");
  evaluate_cmd->add_option("--out", evaluate.out, "Also write the JSON report here");
  evaluate_cmd->add_option("--digits", evaluate.digits, "Decimals in markdown output");
  evaluate_cmd->add_flag("--json", evaluate.json, "Emit JSON instead of markdown");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Compare several evaluation reports");
  report_cmd->add_option("reports", report.inputs, "JSON reports from `evaluate --out`")->required();
  report_cmd->add_option("--digits", report.digits, "Decimals in markdown output");
  report_cmd->add_flag("--json", report.json, "Emit JSON instead of markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  for (std::size_t i = 0; i < setting_flags.size(); ++i) {
    if (setting_opts[i]->count() > 0) {
      predict.flags[setting_flags[i].second] = flag_values[setting_flags[i].second];
    }
  }

  try {
    if (*stats_cmd) return cmd_stats(stats, out, err);
    if (*validate_cmd) return cmd_validate(validate, out, err);
    if (*predict_cmd) return cmd_predict(predict, out, err);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out, err);
    if (*report_cmd) return cmd_report(report, out, err);
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kUsage;
}

}  // namespace causal::cli
