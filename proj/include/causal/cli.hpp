#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace causal::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,
  kBackendError = 3,
  kAlignmentError = 4,
};

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// `key = value` lines; '#' starts a comment. Throws std::runtime_error on a
// malformed line.
std::map<std::string, std::string> parse_config_text(const std::string& text);

}  // namespace causal::cli
