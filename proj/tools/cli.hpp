#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nmsp::cli {

enum ExitStatus : int {
  kSuccess = 0,
  kValidationError = 1,
  kRuntimeFailure = 2,
  kGradCheckFailure = 3,
};

// Runs one invocation. `args` excludes the program name. `env_seed` stands in
// for the NMSP_SEED environment variable.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed = std::nullopt);

}  // namespace nmsp::cli
