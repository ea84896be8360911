#include "twostage/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "twostage/errors.hpp"
#include "twostage/random.hpp"

namespace twostage {

namespace {

constexpr std::uint64_t kLowerBoundStream = 0x10b0d;
constexpr std::uint64_t kScaleStreamBase = 0x5ca1e;

double mean_of(std::span<const double> xs) { return summarize(xs).mean; }

std::uint64_t scale_seed(const SweepOptions& options, std::size_t scale_index) {
  if (options.common_random_numbers) return options.seed;
  return derive_seed(options.seed, kScaleStreamBase + scale_index);
}

SweepRow tabulate(double t, const CostVector& costs, std::span<const PriorSpec> priors,
                  std::span<const double> lambdas, const std::vector<TrialResult>& trials,
                  const RiskEstimate& bound) {
  const std::size_t n = priors.size();
  const std::size_t reps = trials.size();
  const double total_cost = costs.total();
  const double root_total = std::sqrt(total_cost);

  std::vector<double> risk(reps), approx(reps), budget(reps), cs1(reps), cs2(reps);
  std::vector<std::vector<double>> m(n, std::vector<double>(reps));
  std::vector<std::vector<double>> k(n, std::vector<double>(reps));
  std::vector<std::vector<double>> msqrtc(n, std::vector<double>(reps));
  std::vector<std::vector<double>> mrsqrtc(n, std::vector<double>(reps));
  std::vector<std::vector<double>> sqrt_v(n, std::vector<double>(reps));

  SweepRow row;
  row.t = t;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const TrialResult& trial = trials[rep];
    risk[rep] = trial.loss() / root_total;
    approx[rep] = trial.approx_loss() / root_total;
    budget[rep] = trial.budget;
    double plug_in = 0.0;
    double limit = 0.0;
    double gap_term = 0.0;
    double prior_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double root_c = std::sqrt(costs[i]);
      const double share = std::sqrt(costs[i] / total_cost);
      const double weight = static_cast<double>(trial.m[i]) + priors[i].r();
      const double root_u = std::sqrt(trial.u[i]);
      plug_in += share * root_u;
      limit += std::sqrt(lambdas[i]) * std::sqrt(trial.v[i]);
      const double gap = root_u - weight * root_c;
      gap_term += gap * gap / (weight * root_total);
      prior_term += root_c * share * priors[i].r();

      m[i][rep] = static_cast<double>(trial.m[i]);
      k[i][rep] = static_cast<double>(trial.k[i]);
      msqrtc[i][rep] = m[i][rep] * root_c;
      mrsqrtc[i][rep] = weight * root_c;
      sqrt_v[i][rep] = std::sqrt(trial.v[i]);
    }
    cs1[rep] = plug_in - limit;
    cs2[rep] = gap_term;
    const double residual = approx[rep] - 2.0 * plug_in - gap_term + prior_term;
    row.expansion_residual = std::max(row.expansion_residual, std::abs(residual));
  }

  row.scaled_risk = summarize(risk);
  row.scaled_approx_risk = summarize(approx);
  row.lower_bound = bound;
  row.ratio = row.scaled_risk.mean / bound.mean;
  const double rel_risk = row.scaled_risk.std_error / row.scaled_risk.mean;
  const double rel_bound = bound.std_error / bound.mean;
  row.ratio_std_error = row.ratio * std::sqrt(rel_risk * rel_risk + rel_bound * rel_bound);
  row.mean_budget = mean_of(budget);
  row.cs1 = summarize(cs1);
  row.cs2 = summarize(cs2);
  for (std::size_t i = 0; i < n; ++i) {
    row.mean_m.push_back(mean_of(m[i]));
    row.mean_k.push_back(mean_of(k[i]));
    row.mean_msqrtc.push_back(mean_of(msqrtc[i]));
    row.mean_mrsqrtc.push_back(mean_of(mrsqrtc[i]));
    row.mean_sqrt_v.push_back(mean_of(sqrt_v[i]));
  }
  return row;
}

template <class PolicyAt>
std::vector<SweepRow> sweep_impl(std::span<const PriorSpec> priors, const CostSchedule& schedule,
                                 const SweepOptions& options, PolicyAt policy_at) {
  if (schedule.lambdas().size() != priors.size()) {
    throw InvalidInput("schedule lambdas must have one entry per population");
  }
  if (options.replications < 2) throw InvalidInput("replications must be at least 2");
  const RiskEstimate bound =
      lower_bound(priors, schedule.lambdas(), options.lower_bound_draws,
                  derive_seed(options.seed, kLowerBoundStream), options.threads);
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < schedule.scales().size(); ++s) {
    const double t = schedule.scales()[s];
    const CostVector costs = schedule.costs_at(t);
    const std::uint64_t seed = scale_seed(options, s);
    const Policy policy = policy_at(costs, seed);
    const auto trials =
        run_replicates(priors, costs, policy, options.replications, seed, options.threads);
    rows.push_back(tabulate(t, costs, priors, schedule.lambdas(), trials, bound));
  }
  return rows;
}

}  // namespace

CostSchedule::CostSchedule(std::vector<double> lambdas, std::vector<double> scales)
    : lambdas_(std::move(lambdas)), scales_(std::move(scales)) {
  validate_lambdas(lambdas_, lambdas_.size());
  if (scales_.empty()) throw InvalidInput("schedule needs at least one scale");
  for (std::size_t s = 0; s < scales_.size(); ++s) {
    if (!(std::isfinite(scales_[s]) && scales_[s] > 0.0)) {
      throw InvalidInput("scales must be positive");
    }
    if (s > 0 && !(scales_[s] < scales_[s - 1])) {
      throw InvalidInput("scales must be strictly decreasing");
    }
  }
}

CostVector CostSchedule::costs_at(double t) const {
  std::vector<double> c(lambdas_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = lambdas_[i] * t;
  return CostVector(std::move(c));
}

std::vector<SweepRow> run_sweep(std::span<const PriorSpec> priors, const CostSchedule& schedule,
                                const Policy& policy, const SweepOptions& options) {
  return sweep_impl(priors, schedule, options,
                    [&](const CostVector&, std::uint64_t) { return policy; });
}

std::vector<SweepRow> run_sweep(std::span<const PriorSpec> priors, const CostSchedule& schedule,
                                const BudgetMatchedBalanced& policy,
                                const SweepOptions& options) {
  return sweep_impl(priors, schedule, options, [&](const CostVector& costs, std::uint64_t seed) {
    const auto reference = run_replicates(priors, costs, TwoStagePolicy{policy.rule},
                                          options.replications, seed, options.threads);
    std::vector<double> budgets(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) budgets[i] = reference[i].budget;
    return Policy{BalancedPolicy{summarize(budgets).mean}};
  });
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Optimal: return "optimal";
    case Verdict::NotConverged: return "not-converged";
    case Verdict::ViolatedLowerBound: return "violated-lower-bound";
  }
  return "unknown";
}

bool is_non_increasing(std::span<const double> values, std::span<const double> std_errors,
                       double sigmas) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double slack = sigmas * std::hypot(std_errors[i - 1], std_errors[i]);
    if (values[i] > values[i - 1] + slack) return false;
  }
  return true;
}

Verdict check_convergence(std::span<const SweepRow> rows, double tol) {
  if (rows.size() < 3) throw InvalidInput("convergence check needs at least 3 rows");
  for (const SweepRow& row : rows) {
    const double joint = std::hypot(row.scaled_risk.std_error, row.lower_bound.std_error);
    if (row.scaled_risk.mean < row.lower_bound.mean - 3.0 * joint) {
      return Verdict::ViolatedLowerBound;
    }
  }
  std::vector<double> ratios;
  std::vector<double> errors;
  for (const SweepRow& row : rows) {
    ratios.push_back(row.ratio);
    errors.push_back(row.ratio_std_error);
  }
  if (ratios.back() <= 1.0 + tol && is_non_increasing(ratios, errors, 2.0)) {
    return Verdict::Optimal;
  }
  return Verdict::NotConverged;
}

std::vector<RiskEstimate> cs1_diagnostic(std::span<const PriorSpec> priors,
                                         const CostSchedule& schedule, const Policy& policy,
                                         const SweepOptions& options) {
  std::vector<RiskEstimate> out;
  for (const SweepRow& row : run_sweep(priors, schedule, policy, options)) out.push_back(row.cs1);
  return out;
}

std::vector<RiskEstimate> cs2_diagnostic(std::span<const PriorSpec> priors,
                                         const CostSchedule& schedule, const Policy& policy,
                                         const SweepOptions& options) {
  std::vector<RiskEstimate> out;
  for (const SweepRow& row : run_sweep(priors, schedule, policy, options)) out.push_back(row.cs2);
  return out;
}

}  // namespace twostage
