#pragma once

// Monte Carlo estimation of the Bayes risk with sampling cost, its
// large-sample approximation, and the universal lower bound on the scaled
// risk.

#include <cstdint>
#include <span>
#include <vector>

#include "twostage/allocation.hpp"
#include "twostage/expfam.hpp"

namespace twostage {

/// One simulated experiment.
struct TrialResult {
  std::vector<std::uint64_t> m;
  std::vector<std::uint64_t> k;
  double estimate = 0.0;  // prod_i E[psi'(theta_i) | data]
  double target = 0.0;    // prod_i psi'(theta_i)
  double sq_loss = 0.0;
  double budget = 0.0;    // sum_i c_i m_i
  std::vector<double> approx_risk_terms;  // U_i / (m_i + r_i)
  std::vector<double> u;                  // U_i given all final data
  std::vector<double> v;                  // true V_i

  double loss() const noexcept { return sq_loss + budget; }
  double approx_loss() const noexcept;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replications = 0;

  friend bool operator==(const RiskEstimate&, const RiskEstimate&) = default;
};

/// Mean and standard error (sample sd / sqrt(n)) with pairwise summation.
RiskEstimate summarize(std::span<const double> values);

/// Draws theta from the priors, runs the policy and scores the estimate.
/// Bit-reproducible from rep_seed alone.
TrialResult replicate_once(std::span<const PriorSpec> priors, const CostVector& costs,
                           const Policy& policy, std::uint64_t rep_seed);

/// Seed of replicate `index` under master seed `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index);

/// Runs `replications` independent replicates in parallel; the returned vector
/// is ordered by replicate index and independent of `threads`.
std::vector<TrialResult> run_replicates(std::span<const PriorSpec> priors,
                                        const CostVector& costs, const Policy& policy,
                                        std::uint64_t replications, std::uint64_t seed,
                                        unsigned threads = 0);

/// Bayes risk E[(estimate - target)^2 + sum c_i m_i]. Needs replications >= 2.
RiskEstimate estimate_risk(std::span<const PriorSpec> priors, const CostVector& costs,
                           const Policy& policy, std::uint64_t replications,
                           std::uint64_t seed, unsigned threads = 0);

/// Approximate risk E[sum U_i/(m_i + r_i) + sum c_i m_i].
RiskEstimate estimate_approx_risk(std::span<const PriorSpec> priors, const CostVector& costs,
                                  const Policy& policy, std::uint64_t replications,
                                  std::uint64_t seed, unsigned threads = 0);

/// Checks lambda_i in (0, 1] summing to one.
void validate_lambdas(std::span<const double> lambdas, std::size_t n);

/// 2 E[sum_i sqrt(lambda_i) sqrt(V_i)] under the prior.
RiskEstimate lower_bound(std::span<const PriorSpec> priors, std::span<const double> lambdas,
                         std::uint64_t draws, std::uint64_t seed, unsigned threads = 0);

/// Divides mean and stderr by sqrt(sum c_j).
RiskEstimate scaled_risk(const RiskEstimate& risk, const CostVector& costs);

/// U/(m+r) + c m, one population's share of the approximate risk.
double approx_risk_term(double u, double m, double r, double c);

/// 2 sqrt(cU) - c r, the per-population lower bound on approx_risk_term.
double amgm_bound(double u, double r, double c);

/// approx_risk_term minus its square-completion
/// (sqrt(U/(m+r)) - sqrt(c(m+r)))^2 + 2 sqrt(cU) - c r. Zero up to rounding.
double amgm_identity_residual(double u, double m, double r, double c);

}  // namespace twostage
