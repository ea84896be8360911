#pragma once

// Subcommand implementations behind the command-line tool. Each returns its
// output as text so that it can be tested without touching the filesystem.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twostage/config.hpp"

namespace twostage {

enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitValidation = 3,
  kExitRuntime = 4,
};

/// A command-line override or moment condition that the experiment fails.
class ValidationError : public Error {
 public:
  using Error::Error;
};

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replications;
  std::optional<std::string> format;
  std::vector<std::string> compare;
  unsigned threads = 0;
};

struct CommandOutput {
  int exit_code = kExitOk;
  std::string output;    // primary result (stdout or --out)
  std::string sidecar;   // sweep verdict sidecar, JSON lines
  std::string messages;  // warnings for stderr
};

/// Applies command-line overrides; throws ValidationError on bad values.
ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& options);

CommandOutput cmd_validate(const ExperimentConfig& config, const CommandOptions& options);
CommandOutput cmd_run(const ExperimentConfig& config, const CommandOptions& options);
CommandOutput cmd_sweep(const ExperimentConfig& config, const CommandOptions& options);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace twostage
