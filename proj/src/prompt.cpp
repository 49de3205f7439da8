#include "causal/prompt.hpp"

#include <fstream>
#include <iterator>

#include "causal/text.hpp"
#include "prompt_templates.inc"

namespace causal::prompt {
namespace {

std::size_t index_of(PromptKind kind) { return static_cast<std::size_t>(kind); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot open template " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Gen: return "gen";
    case PromptKind::Task: return "task";
    case PromptKind::CoT: return "cot";
  }
  return "gen";
}

std::optional<PromptKind> parse_kind(std::string_view name) {
  for (auto kind : kAllKinds) {
    if (text::iequals(name, to_string(kind))) return kind;
  }
  return std::nullopt;
}

PromptLibrary::PromptLibrary(std::string gen, std::string task, std::string cot)
    : templates_{std::move(gen), std::move(task), std::move(cot)} {
  for (auto kind : kAllKinds) {
    const auto& t = templates_[index_of(kind)];
    const auto first = t.find(kPlaceholder);
    if (first == std::string::npos || t.find(kPlaceholder, first + 1) != std::string::npos) {
      throw PromptError("template '" + std::string(to_string(kind)) +
                        "' must contain exactly one {} placeholder");
    }
  }
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary library(std::string(templates::kGen), std::string(templates::kTask),
                                     std::string(templates::kCot));
  return library;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  return PromptLibrary(read_file(dir / "gen.prompt"), read_file(dir / "task.prompt"),
                       read_file(dir / "cot.prompt"));
}

const std::string& PromptLibrary::template_text(PromptKind kind) const {
  return templates_[index_of(kind)];
}

RenderedPrompt PromptLibrary::render(PromptKind kind, std::string_view context) const {
  if (context.empty()) throw PromptError("cannot render a prompt around an empty context");

  const auto& tmpl = template_text(kind);
  const auto slot = tmpl.find(kPlaceholder);
  RenderedPrompt out;
  out.kind = kind;
  out.context = std::string(context);
  out.text.reserve(tmpl.size() + context.size());
  out.text.append(tmpl, 0, slot);
  out.text.append(context);
  out.text.append(tmpl, slot + kPlaceholder.size());
  if (context.find("```") != std::string_view::npos) {
    out.warning = "context contains a ``` fence; inserted verbatim";
  }
  return out;
}

std::string template_text(PromptKind kind) {
  return PromptLibrary::builtin().template_text(kind);
}

RenderedPrompt render_prompt(PromptKind kind, std::string_view context) {
  return PromptLibrary::builtin().render(kind, context);
}

}  // namespace causal::prompt
