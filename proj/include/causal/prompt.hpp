#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace causal::prompt {

enum class PromptKind { Gen, Task, CoT };

inline constexpr std::array<PromptKind, 3> kAllKinds = {PromptKind::Gen, PromptKind::Task,
                                                       PromptKind::CoT};

// Slot the context document is substituted into.
inline constexpr std::string_view kPlaceholder = "{}";

// "gen", "task", "cot"; also the template file stem.
std::string_view to_string(PromptKind kind);
std::optional<PromptKind> parse_kind(std::string_view name);

struct RenderedPrompt {
  PromptKind kind = PromptKind::Gen;
  std::string text;
  std::string context;
  // Set when the context contains a ``` fence that collides with the
  // template's own delimiters. The context is still inserted verbatim.
  std::optional<std::string> warning;
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A set of three templates. The built-in library is compiled from the
// checked-in prompts/{gen,task,cot}.prompt files; `load` reads the same file
// names from another directory.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();
  static PromptLibrary load(const std::filesystem::path& dir);

  const std::string& template_text(PromptKind kind) const;
  RenderedPrompt render(PromptKind kind, std::string_view context) const;

 private:
  PromptLibrary(std::string gen, std::string task, std::string cot);

  std::array<std::string, 3> templates_;
};

std::string template_text(PromptKind kind);

// Renders with the built-in templates. Throws PromptError on empty context.
RenderedPrompt render_prompt(PromptKind kind, std::string_view context);

}  // namespace causal::prompt
