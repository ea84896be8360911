#pragma once

// Experiment configuration: a strict JSON schema (version 1).
//
// {
//   "schema_version": 1,
//   "populations": [{"family": "bernoulli|poisson|exponential|normal",
//                    "r": <positive>, "mu": <in mean domain>}, ...],
//   "lambdas": [...],            // required with "scales"; optional with "costs"
//   "scales": [...],             // exactly one of "scales" / "costs"
//   "costs": [...],
//   "policy": {"name": "two-stage|balanced|prior-only|oracle|fixed", ...},
//   "replications": 10000, "seed": 1, "p": 1, "format": "csv|json",
//   "lower_bound_draws": 100000, "common_random_numbers": true,
//   "tolerance": 0.1
// }
//
// Policy parameters: two-stage {gamma, k_min}; balanced {budget, gamma, k_min}
// (without a budget the two-stage realized mean budget is matched); fixed {m}.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twostage/errors.hpp"
#include "twostage/expfam.hpp"
#include "twostage/sweep.hpp"

namespace twostage {

class ConfigError : public Error {
 public:
  enum class Kind { Syntax, Schema, Inconsistent };

  ConfigError(Kind kind, std::string path, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

struct PolicyConfig {
  std::string name = "two-stage";
  double gamma = 0.25;
  std::uint64_t k_min = 2;
  std::vector<std::uint64_t> m;   // fixed only
  std::optional<double> budget;   // balanced only

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::vector<PriorSpec> populations;
  std::optional<std::vector<double>> lambdas;
  std::optional<std::vector<double>> scales;
  std::optional<std::vector<double>> costs;
  PolicyConfig policy;
  std::uint64_t replications = 10000;
  std::uint64_t seed = 1;
  int p = 1;
  std::string format = "csv";
  std::uint64_t lower_bound_draws = 100000;
  bool common_random_numbers = true;
  double tolerance = 0.10;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline constexpr std::string_view kPolicyNames[] = {"two-stage", "balanced", "prior-only",
                                                    "oracle", "fixed"};

ExperimentConfig parse_config(std::string_view text);

/// Canonical JSON with every default filled in.
std::string serialize_config(const ExperimentConfig& config);

/// Cross-field checks shared by the parser and by command-line overrides.
void check_consistency(const ExperimentConfig& config);

using ResolvedPolicy = std::variant<Policy, BudgetMatchedBalanced>;

/// Builds a policy by name, taking parameters from config.policy when the
/// names agree and defaults otherwise.
ResolvedPolicy resolve_policy(std::string_view name, const ExperimentConfig& config);

}  // namespace twostage
