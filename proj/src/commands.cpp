#include "twostage/commands.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "twostage/riskmc.hpp"
#include "twostage/sweep.hpp"

namespace twostage {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> policy_names(const ExperimentConfig& config,
                                      const CommandOptions& options) {
  if (options.compare.empty()) return {config.policy.name};
  return options.compare;
}

// Moment conditions must hold before any simulation runs.
std::string require_moments(const ExperimentConfig& config) {
  std::ostringstream errors;
  for (std::size_t i = 0; i < config.populations.size(); ++i) {
    const MomentCheck check = check_moment_condition(config.populations[i], config.p);
    if (!check) errors << "populations[" << i << "]: " << check.violation << "\n";
  }
  return errors.str();
}

std::string p2_warnings(const ExperimentConfig& config) {
  std::ostringstream out;
  for (std::size_t i = 0; i < config.populations.size(); ++i) {
    const MomentCheck check = check_moment_condition(config.populations[i], 2);
    if (!check) {
      out << "warning: populations[" << i
          << "] fails the moment condition at p = 2, which the two-stage optimality argument"
             " uses: "
          << check.violation << "\n";
    }
  }
  return out.str();
}

std::vector<TrialResult> simulate(const ResolvedPolicy& resolved,
                                  std::span<const PriorSpec> priors, const CostVector& costs,
                                  std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  if (const auto* policy = std::get_if<Policy>(&resolved)) {
    return run_replicates(priors, costs, *policy, reps, seed, threads);
  }
  const auto& matched = std::get<BudgetMatchedBalanced>(resolved);
  const auto reference =
      run_replicates(priors, costs, TwoStagePolicy{matched.rule}, reps, seed, threads);
  std::vector<double> budgets(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) budgets[i] = reference[i].budget;
  return run_replicates(priors, costs, BalancedPolicy{summarize(budgets).mean}, reps, seed,
                        threads);
}

std::vector<SweepRow> sweep(const ResolvedPolicy& resolved, std::span<const PriorSpec> priors,
                            const CostSchedule& schedule, const SweepOptions& options) {
  if (const auto* policy = std::get_if<Policy>(&resolved)) {
    return run_sweep(priors, schedule, *policy, options);
  }
  return run_sweep(priors, schedule, std::get<BudgetMatchedBalanced>(resolved), options);
}

json estimate_json(const RiskEstimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"replications", e.replications}};
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + "\n";
}

template <class F>
std::vector<double> per_row(const std::vector<SweepRow>& rows, F field) {
  std::vector<double> out;
  for (const SweepRow& row : rows) out.push_back(field(row));
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.replications) {
    if (*options.replications < 2) {
      throw ValidationError("--reps must be at least 2 (got " +
                            std::to_string(*options.replications) + ")");
    }
    config.replications = *options.replications;
  }
  if (options.format) {
    if (*options.format != "csv" && *options.format != "json") {
      throw ValidationError("--format must be csv or json");
    }
    config.format = *options.format;
  }
  for (const std::string& name : options.compare) {
    resolve_policy(name, config);
  }
  return config;
}

CommandOutput cmd_validate(const ExperimentConfig& config, const CommandOptions& options) {
  CommandOutput out;
  const ExperimentConfig effective = apply_overrides(config, options);
  json report;
  json pops = json::array();
  bool valid = true;
  for (std::size_t i = 0; i < effective.populations.size(); ++i) {
    const PriorSpec& prior = effective.populations[i];
    const MomentCheck check = check_moment_condition(prior, effective.p);
    valid = valid && check.validated;
    json entry = {{"index", i},
                  {"family", std::string(to_string(prior.family()))},
                  {"validated", check.validated}};
    if (!check) entry["violation"] = check.violation;
    pops.push_back(entry);
  }
  out.messages = p2_warnings(effective);
  json warnings = json::array();
  std::istringstream lines(out.messages);
  for (std::string line; std::getline(lines, line);) warnings.push_back(line);

  report["valid"] = valid;
  report["p"] = effective.p;
  report["populations"] = pops;
  report["warnings"] = warnings;
  report["config"] = json::parse(serialize_config(effective));
  out.output = report.dump(2) + "\n";
  out.exit_code = valid ? kExitOk : kExitValidation;
  return out;
}

CommandOutput cmd_run(const ExperimentConfig& config, const CommandOptions& options) {
  CommandOutput out;
  const ExperimentConfig cfg = apply_overrides(config, options);
  if (const std::string bad = require_moments(cfg); !bad.empty()) throw ValidationError(bad);
  out.messages = p2_warnings(cfg);

  const std::size_t n = cfg.populations.size();
  // Without explicit costs a run uses the smallest scale of the schedule.
  const CostVector costs = cfg.costs ? CostVector(*cfg.costs)
                                     : CostSchedule(*cfg.lambdas, *cfg.scales)
                                           .costs_at(cfg.scales->back());
  std::optional<RiskEstimate> bound;
  if (cfg.lambdas) {
    bound = lower_bound(cfg.populations, *cfg.lambdas, cfg.lower_bound_draws,
                        derive_seed(cfg.seed, 0x10b0d), options.threads);
  }

  std::vector<std::string> header = {"policy", "replications", "risk", "risk_stderr",
                                     "approx_risk", "approx_risk_stderr", "scaled_risk",
                                     "scaled_risk_stderr", "lower_bound", "lower_bound_stderr",
                                     "mean_budget", "mean_sq_loss"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("mean_m_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) header.push_back("mean_k_" + std::to_string(i));
  std::string csv = join_csv(header);
  json results = json::array();

  for (const std::string& name : policy_names(cfg, options)) {
    const auto trials = simulate(resolve_policy(name, cfg), cfg.populations, costs,
                                 cfg.replications, cfg.seed, options.threads);
    const std::size_t reps = trials.size();
    std::vector<double> loss(reps), approx(reps), budget(reps), sq(reps);
    std::vector<std::vector<double>> m(n, std::vector<double>(reps));
    std::vector<std::vector<double>> k(n, std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
      loss[r] = trials[r].loss();
      approx[r] = trials[r].approx_loss();
      budget[r] = trials[r].budget;
      sq[r] = trials[r].sq_loss;
      for (std::size_t i = 0; i < n; ++i) {
        m[i][r] = static_cast<double>(trials[r].m[i]);
        k[i][r] = static_cast<double>(trials[r].k[i]);
      }
    }
    const RiskEstimate risk = summarize(loss);
    const RiskEstimate approx_risk = summarize(approx);
    const RiskEstimate scaled = scaled_risk(risk, costs);
    std::vector<double> mean_m, mean_k;
    for (std::size_t i = 0; i < n; ++i) {
      mean_m.push_back(summarize(m[i]).mean);
      mean_k.push_back(summarize(k[i]).mean);
    }
    const double mean_budget = summarize(budget).mean;
    const double mean_sq = summarize(sq).mean;

    std::vector<std::string> cells = {name,
                                      std::to_string(reps),
                                      format_double(risk.mean),
                                      format_double(risk.std_error),
                                      format_double(approx_risk.mean),
                                      format_double(approx_risk.std_error),
                                      format_double(scaled.mean),
                                      format_double(scaled.std_error),
                                      bound ? format_double(bound->mean) : "",
                                      bound ? format_double(bound->std_error) : "",
                                      format_double(mean_budget),
                                      format_double(mean_sq)};
    for (double v : mean_m) cells.push_back(format_double(v));
    for (double v : mean_k) cells.push_back(format_double(v));
    csv += join_csv(cells);

    json entry = {{"policy", name},
                  {"risk", estimate_json(risk)},
                  {"approx_risk", estimate_json(approx_risk)},
                  {"scaled_risk", estimate_json(scaled)},
                  {"mean_budget", mean_budget},
                  {"mean_sq_loss", mean_sq},
                  {"mean_m", mean_m},
                  {"mean_k", mean_k}};
    entry["lower_bound"] = bound ? estimate_json(*bound) : json(nullptr);
    results.push_back(entry);
  }

  if (cfg.format == "json") {
    json doc = {{"command", "run"},
                {"seed", cfg.seed},
                {"replications", cfg.replications},
                {"costs", std::vector<double>(costs.values().begin(), costs.values().end())},
                {"results", results}};
    out.output = doc.dump(2) + "\n";
  } else {
    out.output = csv;
  }
  return out;
}

CommandOutput cmd_sweep(const ExperimentConfig& config, const CommandOptions& options) {
  CommandOutput out;
  const ExperimentConfig cfg = apply_overrides(config, options);
  if (!cfg.scales) {
    throw ValidationError("sweep needs \"scales\" and \"lambdas\" in the config");
  }
  if (const std::string bad = require_moments(cfg); !bad.empty()) throw ValidationError(bad);
  out.messages = p2_warnings(cfg);

  const std::size_t n = cfg.populations.size();
  const CostSchedule schedule(*cfg.lambdas, *cfg.scales);
  SweepOptions sweep_options;
  sweep_options.replications = cfg.replications;
  sweep_options.seed = cfg.seed;
  sweep_options.lower_bound_draws = cfg.lower_bound_draws;
  sweep_options.common_random_numbers = cfg.common_random_numbers;
  sweep_options.threads = options.threads;

  std::vector<std::string> header = {"t",           "scaled_risk", "scaled_risk_stderr",
                                     "scaled_approx_risk", "lower_bound", "ratio"};
  for (std::size_t i = 1; i <= n; ++i) {
    header.push_back("mean_k_" + std::to_string(i));
    header.push_back("mean_m_" + std::to_string(i));
    header.push_back("mean_msqrtc_" + std::to_string(i));
  }

  const auto names = policy_names(cfg, options);
  const bool blocks = !options.compare.empty();
  std::string csv;
  json policies = json::array();
  json verdicts = json::object();

  for (const std::string& name : names) {
    const auto rows = sweep(resolve_policy(name, cfg), cfg.populations, schedule, sweep_options);
    std::string verdict = "too-few-rows";
    if (rows.size() >= 3) verdict = std::string(to_string(check_convergence(rows, cfg.tolerance)));
    verdicts[name] = verdict;

    if (blocks) csv += "# policy=" + name + "\n";
    csv += join_csv(header);
    json row_docs = json::array();
    for (const SweepRow& row : rows) {
      std::vector<std::string> cells = {format_double(row.t),
                                        format_double(row.scaled_risk.mean),
                                        format_double(row.scaled_risk.std_error),
                                        format_double(row.scaled_approx_risk.mean),
                                        format_double(row.lower_bound.mean),
                                        format_double(row.ratio)};
      for (std::size_t i = 0; i < n; ++i) {
        cells.push_back(format_double(row.mean_k[i]));
        cells.push_back(format_double(row.mean_m[i]));
        cells.push_back(format_double(row.mean_msqrtc[i]));
      }
      csv += join_csv(cells);
      row_docs.push_back({{"t", row.t},
                          {"scaled_risk", estimate_json(row.scaled_risk)},
                          {"scaled_approx_risk", estimate_json(row.scaled_approx_risk)},
                          {"lower_bound", estimate_json(row.lower_bound)},
                          {"ratio", row.ratio},
                          {"ratio_stderr", row.ratio_std_error},
                          {"mean_k", row.mean_k},
                          {"mean_m", row.mean_m},
                          {"mean_msqrtc", row.mean_msqrtc},
                          {"cs1", estimate_json(row.cs1)},
                          {"cs2", estimate_json(row.cs2)}});
    }

    json diag = {{"policy", name},
                 {"verdict", verdict},
                 {"lower_bound", rows.front().lower_bound.mean},
                 {"lower_bound_stderr", rows.front().lower_bound.std_error},
                 {"t", per_row(rows, [](const SweepRow& r) { return r.t; })},
                 {"ratio", per_row(rows, [](const SweepRow& r) { return r.ratio; })},
                 {"ratio_stderr", per_row(rows, [](const SweepRow& r) { return r.ratio_std_error; })},
                 {"cs1", per_row(rows, [](const SweepRow& r) { return r.cs1.mean; })},
                 {"cs1_stderr", per_row(rows, [](const SweepRow& r) { return r.cs1.std_error; })},
                 {"cs2", per_row(rows, [](const SweepRow& r) { return r.cs2.mean; })},
                 {"cs2_stderr", per_row(rows, [](const SweepRow& r) { return r.cs2.std_error; })},
                 {"mean_budget", per_row(rows, [](const SweepRow& r) { return r.mean_budget; })},
                 {"expansion_residual",
                  per_row(rows, [](const SweepRow& r) { return r.expansion_residual; })}};
    json tracking = json::array();
    for (const SweepRow& row : rows) {
      tracking.push_back({{"mean_mrsqrtc", row.mean_mrsqrtc}, {"mean_sqrt_v", row.mean_sqrt_v}});
    }
    diag["tracking"] = tracking;
    out.sidecar += diag.dump() + "\n";

    diag["rows"] = row_docs;
    policies.push_back(diag);
  }
  out.sidecar += json{{"verdicts", verdicts}}.dump() + "\n";

  if (cfg.format == "json") {
    json doc = {{"command", "sweep"},
                {"seed", cfg.seed},
                {"replications", cfg.replications},
                {"policies", policies},
                {"verdicts", verdicts}};
    out.output = doc.dump(2) + "\n";
  } else {
    out.output = csv;
  }
  return out;
}

}  // namespace twostage
