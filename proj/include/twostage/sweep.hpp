#pragma once

// Cost-to-zero sweeps: scaled risk against the lower bound at a decreasing
// sequence of cost scales, plus the sufficient-condition diagnostics.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "twostage/allocation.hpp"
#include "twostage/riskmc.hpp"

namespace twostage {

/// c_i(t) = lambda_i * t over strictly decreasing scales t.
class CostSchedule {
 public:
  CostSchedule(std::vector<double> lambdas, std::vector<double> scales);

  std::span<const double> lambdas() const noexcept { return lambdas_; }
  std::span<const double> scales() const noexcept { return scales_; }
  CostVector costs_at(double t) const;

 private:
  std::vector<double> lambdas_;
  std::vector<double> scales_;
};

/// Balanced allocation whose budget, at every scale, equals the mean realized
/// budget of the two-stage rule on the same replicates.
struct BudgetMatchedBalanced {
  StageOneRule rule;
};

struct SweepOptions {
  std::uint64_t replications = 10000;
  std::uint64_t seed = 1;
  std::uint64_t lower_bound_draws = 100000;
  /// Reuse the same replicate seeds (prior draws) at every scale.
  bool common_random_numbers = true;
  unsigned threads = 0;
};

struct SweepRow {
  double t = 0.0;
  RiskEstimate scaled_risk;
  RiskEstimate scaled_approx_risk;
  RiskEstimate lower_bound;
  double ratio = 0.0;
  double ratio_std_error = 0.0;
  std::vector<double> mean_m;
  std::vector<double> mean_k;
  std::vector<double> mean_msqrtc;    // E[m_i sqrt(c_i)]
  std::vector<double> mean_mrsqrtc;   // E[(m_i + r_i) sqrt(c_i)]
  std::vector<double> mean_sqrt_v;    // E[sqrt(V_i)] on the same replicates
  double mean_budget = 0.0;
  RiskEstimate cs1;  // E[sum sqrt(c_i/C) sqrt(U_i)] - E[sum sqrt(lambda_i) sqrt(V_i)]
  RiskEstimate cs2;  // E[sum (sqrt(U_i) - (m_i+r_i) sqrt(c_i))^2 / ((m_i+r_i) sqrt(C))]
  /// Largest per-replicate deviation from the exact decomposition of the
  /// scaled approximate risk into its cs1 and cs2 parts.
  double expansion_residual = 0.0;
};

std::vector<SweepRow> run_sweep(std::span<const PriorSpec> priors, const CostSchedule& schedule,
                                const Policy& policy, const SweepOptions& options);
std::vector<SweepRow> run_sweep(std::span<const PriorSpec> priors, const CostSchedule& schedule,
                                const BudgetMatchedBalanced& policy, const SweepOptions& options);

enum class Verdict { Optimal, NotConverged, ViolatedLowerBound };

std::string_view to_string(Verdict verdict);

/// True when each value exceeds its predecessor by at most
/// `sigmas` * sqrt(se_prev^2 + se_next^2).
bool is_non_increasing(std::span<const double> values, std::span<const double> std_errors,
                       double sigmas);

/// Needs at least 3 rows. Lower-bound violations (beyond 3 joint stderr) take
/// precedence; otherwise optimal iff the final ratio is <= 1 + tol and the
/// ratios are non-increasing up to 2 stderr.
Verdict check_convergence(std::span<const SweepRow> rows, double tol);

std::vector<RiskEstimate> cs1_diagnostic(std::span<const PriorSpec> priors,
                                         const CostSchedule& schedule, const Policy& policy,
                                         const SweepOptions& options);
std::vector<RiskEstimate> cs2_diagnostic(std::span<const PriorSpec> priors,
                                         const CostSchedule& schedule, const Policy& policy,
                                         const SweepOptions& options);

}  // namespace twostage
