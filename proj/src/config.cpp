#include "twostage/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace twostage {

namespace {

using json = nlohmann::ordered_json;
using Kind = ConfigError::Kind;

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw ConfigError(Kind::Schema, path, message);
}

void reject_unknown_keys(const json& object, const std::string& path,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error(path.empty() ? key : path + "." + key, "unknown key \"" + key + "\"");
    }
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path.empty() ? "$" : path, "expected an object");
  return j;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

std::uint64_t get_count(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) schema_error(path, "expected a nonnegative integer");
  schema_error(path, "expected an integer");
}

std::vector<double> get_number_list(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

PriorSpec parse_population(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path, {"family", "r", "mu"});
  for (const char* key : {"family", "r", "mu"}) {
    if (!j.contains(key)) schema_error(path + "." + key, "missing required key");
  }
  if (!j["family"].is_string()) schema_error(path + ".family", "expected a string");
  const auto family = family_from_string(j["family"].get<std::string>());
  if (!family) {
    schema_error(path + ".family",
                 "unknown family (expected bernoulli, poisson, exponential or normal)");
  }
  const double r = get_number(j["r"], path + ".r");
  const double mu = get_number(j["mu"], path + ".mu");
  try {
    return PriorSpec(*family, r, mu);
  } catch (const InvalidInput& e) {
    schema_error(path, e.what());
  }
}

PolicyConfig parse_policy(const json& j) {
  const std::string path = "policy";
  require_object(j, path);
  if (!j.contains("name") || !j["name"].is_string()) {
    schema_error(path + ".name", "expected a policy name string");
  }
  PolicyConfig out;
  out.name = j["name"].get<std::string>();
  if (std::find(std::begin(kPolicyNames), std::end(kPolicyNames), out.name) ==
      std::end(kPolicyNames)) {
    schema_error(path + ".name", "unknown policy \"" + out.name + "\"");
  }
  if (out.name == "two-stage") {
    reject_unknown_keys(j, path, {"name", "gamma", "k_min"});
  } else if (out.name == "balanced") {
    reject_unknown_keys(j, path, {"name", "budget", "gamma", "k_min"});
  } else if (out.name == "fixed") {
    reject_unknown_keys(j, path, {"name", "m"});
  } else {
    reject_unknown_keys(j, path, {"name"});
  }
  if (j.contains("gamma")) out.gamma = get_number(j["gamma"], path + ".gamma");
  if (j.contains("k_min")) out.k_min = get_count(j["k_min"], path + ".k_min");
  try {
    StageOneRule(out.gamma, out.k_min);
  } catch (const InvalidInput& e) {
    schema_error(path, e.what());
  }
  if (j.contains("budget")) {
    out.budget = get_number(j["budget"], path + ".budget");
    if (!(*out.budget > 0.0)) schema_error(path + ".budget", "budget must be positive");
  }
  if (out.name == "fixed") {
    if (!j.contains("m") || !j["m"].is_array()) {
      schema_error(path + ".m", "fixed policy needs an array of sizes");
    }
    for (std::size_t i = 0; i < j["m"].size(); ++i) {
      out.m.push_back(get_count(j["m"][i], path + ".m[" + std::to_string(i) + "]"));
    }
  }
  return out;
}

json policy_to_json(const PolicyConfig& p) {
  json j;
  j["name"] = p.name;
  if (p.name == "two-stage" || p.name == "balanced") {
    j["gamma"] = p.gamma;
    j["k_min"] = p.k_min;
  }
  if (p.name == "balanced" && p.budget) j["budget"] = *p.budget;
  if (p.name == "fixed") j["m"] = p.m;
  return j;
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::string path, const std::string& message)
    : Error(path.empty() ? message : path + ": " + message), kind_(kind), path_(std::move(path)) {}

void check_consistency(const ExperimentConfig& c) {
  const std::size_t n = c.populations.size();
  if (n == 0) throw ConfigError(Kind::Inconsistent, "populations", "need at least one population");
  if (c.scales.has_value() == c.costs.has_value()) {
    throw ConfigError(Kind::Inconsistent, "scales",
                      "exactly one of \"scales\" and \"costs\" must be given");
  }
  if (c.lambdas) {
    if (c.lambdas->size() != n) {
      throw ConfigError(Kind::Inconsistent, "lambdas", "length must equal the population count");
    }
    try {
      validate_lambdas(*c.lambdas, n);
    } catch (const InvalidInput& e) {
      throw ConfigError(Kind::Schema, "lambdas", e.what());
    }
  }
  if (c.scales) {
    if (!c.lambdas) {
      throw ConfigError(Kind::Inconsistent, "lambdas", "\"scales\" requires \"lambdas\"");
    }
    try {
      CostSchedule(*c.lambdas, *c.scales);
    } catch (const InvalidInput& e) {
      throw ConfigError(Kind::Inconsistent, "scales", e.what());
    }
  }
  if (c.costs) {
    if (c.costs->size() != n) {
      throw ConfigError(Kind::Inconsistent, "costs", "length must equal the population count");
    }
    try {
      CostVector{*c.costs};
    } catch (const InvalidInput& e) {
      throw ConfigError(Kind::Schema, "costs", e.what());
    }
  }
  if (c.policy.name == "fixed" && c.policy.m.size() != n) {
    throw ConfigError(Kind::Inconsistent, "policy.m", "length must equal the population count");
  }
  if (c.replications < 2) {
    throw ConfigError(Kind::Schema, "replications", "must be at least 2");
  }
  if (c.lower_bound_draws < 2) {
    throw ConfigError(Kind::Schema, "lower_bound_draws", "must be at least 2");
  }
  if (c.p < 1) throw ConfigError(Kind::Schema, "p", "moment order must be >= 1");
  if (c.format != "csv" && c.format != "json") {
    throw ConfigError(Kind::Schema, "format", "expected \"csv\" or \"json\"");
  }
  if (!(c.tolerance > 0.0)) throw ConfigError(Kind::Schema, "tolerance", "must be positive");
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(Kind::Syntax, "", std::string("malformed JSON: ") + e.what());
  }
  require_object(j, "");
  reject_unknown_keys(j, "",
                      {"schema_version", "populations", "lambdas", "scales", "costs", "policy",
                       "replications", "seed", "p", "format", "lower_bound_draws",
                       "common_random_numbers", "tolerance"});

  ExperimentConfig c;
  if (j.contains("schema_version")) {
    if (get_count(j["schema_version"], "schema_version") != 1) {
      schema_error("schema_version", "only schema version 1 is supported");
    }
  }
  if (!j.contains("populations") || !j["populations"].is_array()) {
    schema_error("populations", "expected an array of populations");
  }
  for (std::size_t i = 0; i < j["populations"].size(); ++i) {
    c.populations.push_back(
        parse_population(j["populations"][i], "populations[" + std::to_string(i) + "]"));
  }
  if (j.contains("lambdas")) c.lambdas = get_number_list(j["lambdas"], "lambdas");
  if (j.contains("scales")) c.scales = get_number_list(j["scales"], "scales");
  if (j.contains("costs")) c.costs = get_number_list(j["costs"], "costs");
  if (j.contains("policy")) c.policy = parse_policy(j["policy"]);
  if (j.contains("replications")) c.replications = get_count(j["replications"], "replications");
  if (j.contains("seed")) c.seed = get_count(j["seed"], "seed");
  if (j.contains("p")) {
    const std::uint64_t p = get_count(j["p"], "p");
    if (p < 1 || p > 64) schema_error("p", "moment order must be in [1, 64]");
    c.p = static_cast<int>(p);
  }
  if (j.contains("format")) {
    if (!j["format"].is_string()) schema_error("format", "expected a string");
    c.format = j["format"].get<std::string>();
  }
  if (j.contains("lower_bound_draws")) {
    c.lower_bound_draws = get_count(j["lower_bound_draws"], "lower_bound_draws");
  }
  if (j.contains("common_random_numbers")) {
    if (!j["common_random_numbers"].is_boolean()) {
      schema_error("common_random_numbers", "expected a boolean");
    }
    c.common_random_numbers = j["common_random_numbers"].get<bool>();
  }
  if (j.contains("tolerance")) c.tolerance = get_number(j["tolerance"], "tolerance");
  check_consistency(c);
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  json pops = json::array();
  for (const PriorSpec& prior : c.populations) {
    pops.push_back({{"family", std::string(to_string(prior.family()))},
                    {"r", prior.r()},
                    {"mu", prior.mu()}});
  }
  j["populations"] = pops;
  if (c.lambdas) j["lambdas"] = *c.lambdas;
  if (c.scales) j["scales"] = *c.scales;
  if (c.costs) j["costs"] = *c.costs;
  j["policy"] = policy_to_json(c.policy);
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["p"] = c.p;
  j["format"] = c.format;
  j["lower_bound_draws"] = c.lower_bound_draws;
  j["common_random_numbers"] = c.common_random_numbers;
  j["tolerance"] = c.tolerance;
  return j.dump(2);
}

ResolvedPolicy resolve_policy(std::string_view name, const ExperimentConfig& config) {
  const PolicyConfig defaults;
  const PolicyConfig& params = config.policy.name == name ? config.policy : defaults;
  // Balanced without its own parameters borrows the configured two-stage rule.
  const PolicyConfig& rule_source =
      (name == "balanced" && config.policy.name == "two-stage") ? config.policy : params;
  const StageOneRule rule(rule_source.gamma, rule_source.k_min);
  if (name == "two-stage") return Policy{TwoStagePolicy{rule}};
  if (name == "oracle") return Policy{OraclePolicy{}};
  if (name == "prior-only") return Policy{PriorOnlyPolicy{}};
  if (name == "balanced") {
    if (params.budget) return Policy{BalancedPolicy{*params.budget}};
    return BudgetMatchedBalanced{rule};
  }
  if (name == "fixed") {
    // Without configured sizes the fixed policy is the one-observation control.
    if (config.policy.name != "fixed") {
      return Policy{FixedVectorPolicy{std::vector<std::uint64_t>(config.populations.size(), 1)}};
    }
    return Policy{FixedVectorPolicy{config.policy.m}};
  }
  throw ConfigError(Kind::Schema, "policy", "unknown policy \"" + std::string(name) + "\"");
}

}  // namespace twostage
